from typing import Dict, Optional

from latopt.common.errors import ConfigError


class DesignOptions(object):
    """Which fields the optimizer may change; R is always updated

    Properties:
        optimize_phi (bool): lattice fraction is free, otherwise fixed at 1
        optimize_alpha (bool): scaling is free, otherwise fixed at its initial value
        isotropic_alpha (bool): one scaling variable shared by all axes
    """

    def __init__(
        self, optimize_phi: bool = True, optimize_alpha: bool = True, isotropic_alpha: bool = False
    ):
        super(DesignOptions, self).__init__()
        self.optimize_phi = bool(optimize_phi)
        self.optimize_alpha = bool(optimize_alpha)
        self.isotropic_alpha = bool(isotropic_alpha)

    @classmethod
    def from_preset(cls, preset_id: str, registry: Dict) -> 'DesignOptions':
        for preset in registry.get('presets', []):
            if preset['preset_id'] == preset_id:
                return cls(preset['optimize_phi'], preset['optimize_alpha'], preset['isotropic_alpha'])
        known = [p['preset_id'] for p in registry.get('presets', [])]
        raise ConfigError(f'Unknown preset "{preset_id}", available: {known}')

    def to_dict(self) -> Dict:
        return {
            'optimize_phi': int(self.optimize_phi),
            'optimize_alpha': int(self.optimize_alpha),
            'isotropic_alpha': int(self.isotropic_alpha),
        }

    def __eq__(self, other) -> bool:
        return isinstance(other, DesignOptions) and self.to_dict() == other.to_dict()


class OptimizerConfig(object):
    """Parameters of the optimization loop, see setting.yml `run_defaults.optimizer`"""

    FIELDS = {
        'vbar': 0.15,
        'p': 3.0,
        'filter_radius': 1.5,
        'beta_init': 1.0,
        'beta_max': 32.0,
        'beta_every': 10,
        'eta': 0.5,
        'max_iters': 60,
        'move_limit': 0.2,
        'conv_tol': 0.01,
        'phi_min': 1e-9,
        'eps_iso': 1e-6,
        'solver': 'direct',
        'mma_asyinit': 0.5,
        'mma_asyincr': 1.2,
        'mma_asydecr': 0.7,
    }

    def __init__(self, design_options: Optional[DesignOptions] = None, **kwargs):
        super(OptimizerConfig, self).__init__()
        unknown = set(kwargs) - set(OptimizerConfig.FIELDS)
        if unknown:
            raise ConfigError(f'Unknown optimizer settings {sorted(unknown)}')
        for name, default in OptimizerConfig.FIELDS.items():
            value = kwargs.get(name, default)
            setattr(self, name, type(default)(value))
        self.design_options = design_options or DesignOptions()
        self.validate()

    def validate(self):
        if not 0 < self.vbar < 1:
            raise ConfigError(f'vbar must lie in (0, 1), got {self.vbar}')
        if self.p < 1:
            raise ConfigError(f'Penalization exponent must be >= 1, got {self.p}')
        if self.filter_radius < 1:
            raise ConfigError(f'Filter radius must be >= 1 element, got {self.filter_radius}')
        if self.beta_init < 1 or self.beta_max < self.beta_init:
            raise ConfigError(f'Need 1 <= beta_init <= beta_max, got {self.beta_init}, {self.beta_max}')
        if not 0 < self.eta < 1:
            raise ConfigError(f'eta must lie in (0, 1), got {self.eta}')
        if self.max_iters < 1 or self.beta_every < 1:
            raise ConfigError('max_iters and beta_every must be positive')
        if not 0 < self.move_limit <= 1:
            raise ConfigError(f'Move limit must lie in (0, 1], got {self.move_limit}')
        if self.solver not in ('direct', 'cg'):
            raise ConfigError(f'Unknown solver "{self.solver}"')

    def to_dict(self) -> Dict:
        ret = {name: getattr(self, name) for name in OptimizerConfig.FIELDS}
        ret['design_options'] = self.design_options.to_dict()
        return ret

    @classmethod
    def from_dict(cls, d: Dict) -> 'OptimizerConfig':
        d = dict(d)
        options = d.pop('design_options', None)
        return cls(DesignOptions(**options) if options else None, **d)
