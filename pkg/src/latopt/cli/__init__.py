from .console import Console, main
