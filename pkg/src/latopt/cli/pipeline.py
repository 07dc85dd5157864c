import json
import time
import traceback
from pathlib import Path
from typing import Dict, List, Optional

from latopt.cli.run_config import RunConfig
from latopt.cli.validate import ValidationResult, rasterize_and_validate
from latopt.common import config
from latopt.common.errors import ConfigError, LatoptError
from latopt.common.problem_manager import load_problem
from latopt.common.util import get_child_logger
from latopt.compiler import LatticeCompiler
from latopt.compiler.export import (
    read_lattice_json,
    strut_width,
    write_lattice_json,
    write_lattice_obj,
    write_lattice_svg,
)
from latopt.compiler.graph import LatticeGraph
from latopt.fea.bc import BoundaryConditions, read_bc_file
from latopt.fea.solver import assemble_and_solve
from latopt.fields.fractions import feasible_isotropic_alpha
from latopt.fields.grid import DesignFields, GridDomain
from latopt.fields.io import read_fields_csv, write_fields_csv, write_pgm
from latopt.fields.shape import build_compilation_graph, threshold_shape
from latopt.homogenization.lookup import ElasticityLookup, load_or_build_lookup
from latopt.optimizer.loop import optimize, write_history_csv
from latopt.optimizer.sensitivity import uniform_reference

FIELDS_CSV = 'fields.csv'
FIELDS_PGM = 'phi.pgm'
HISTORY_CSV = 'history.csv'
LATTICE_JSON = 'lattice.json'
LATTICE_OBJ = 'lattice.obj'
LATTICE_SVG = 'lattice.svg'
REPORT_JSON = 'report.json'
TIMINGS_JSON = 'timings.json'
FAILURE_JSON = 'failure.json'

TIMING_KEYS = ('T_FEA', 'T_Opt', 'T_pre', 'T_posy', 'T_extr', 'T_validate', 'T_Total')


class RunReport(object):
    """Results of one run

    report.json holds everything except wall-clock timings, which go to
    timings.json, so that reruns with the same seed produce the same report.

    Properties:
        config (Dict): the run config
        results (Dict): J, V, iterations, reference compliances
        counts (Dict): lattice vertices and struts
        diagnostics (Dict): extraction counters
        validation (Optional[Dict]): cross-validation record
        artifacts (List[str]): files written, sorted
        notes (List[str]): skipped outputs and other remarks
        timings (Dict): stage seconds
    """

    def __init__(self, run_config: RunConfig):
        super(RunReport, self).__init__()
        self.config = run_config.to_dict()
        self.results: Dict = {}
        self.counts: Dict = {}
        self.diagnostics: Dict = {}
        self.validation: Optional[Dict] = None
        self.artifacts: List[str] = []
        self.notes: List[str] = []
        self.timings: Dict[str, float] = {key: 0.0 for key in TIMING_KEYS}

    def to_dict(self) -> Dict:
        return {
            'config': self.config,
            'results': self.results,
            'counts': self.counts,
            'diagnostics': self.diagnostics,
            'validation': self.validation,
            'artifacts': self.artifacts,
            'notes': self.notes,
        }


def output_path(run_config: RunConfig, working_dir: Optional[str] = None) -> Path:
    out = Path(run_config.output_dir)
    return out if out.is_absolute() else Path(working_dir or config.get_working_dir(), out)


def write_json(path: Path, data: Dict):
    path.parent.mkdir(parents=1, exist_ok=1)
    with open(path, 'w') as f:
        json.dump(data, f, indent=1, sort_keys=True)


def write_failure(out: Path, stage: str, error: Exception):
    write_json(
        out.joinpath(FAILURE_JSON),
        {'stage': stage, 'error': type(error).__name__, 'message': str(error)},
    )


def export_all(
    out: Path,
    report: RunReport,
    domain: Optional[GridDomain] = None,
    fields: Optional[DesignFields] = None,
    history: Optional[List[Dict]] = None,
    lattice: Optional[LatticeGraph] = None,
    width: Optional[float] = None,
) -> List[str]:
    """Write every available artifact plus report.json and timings.json"""
    out = Path(out)
    out.mkdir(parents=1, exist_ok=1)
    written = []
    if fields is not None and domain is not None:
        write_fields_csv(out.joinpath(FIELDS_CSV), domain, fields)
        written.append(FIELDS_CSV)
        if domain.dim == 2:
            write_pgm(out.joinpath(FIELDS_PGM), domain, fields.phi_bar)
            written.append(FIELDS_PGM)
    if history:
        write_history_csv(out.joinpath(HISTORY_CSV), history)
        written.append(HISTORY_CSV)
    if lattice is not None:
        if lattice.is_empty():
            report.notes.append('lattice is empty, lattice files skipped')
        else:
            write_lattice_json(out.joinpath(LATTICE_JSON), lattice)
            write_lattice_obj(out.joinpath(LATTICE_OBJ), lattice)
            written += [LATTICE_JSON, LATTICE_OBJ]
            if lattice.dim == 2 and width is not None:
                write_lattice_svg(out.joinpath(LATTICE_SVG), lattice, width)
                written.append(LATTICE_SVG)
    written += [REPORT_JSON, TIMINGS_JSON]
    report.artifacts = sorted(written)
    write_json(out.joinpath(REPORT_JSON), report.to_dict())
    write_json(out.joinpath(TIMINGS_JSON), report.timings)
    return report.artifacts


def load_bc(run_config: RunConfig, domain: GridDomain) -> BoundaryConditions:
    problem = run_config['problem']
    bc_file = run_config.resolve_path(problem.get('bc_file', ''))
    if bc_file is not None:
        return read_bc_file(bc_file.as_posix(), domain)
    return load_problem(problem['id']).build_bc(domain, float(problem.get('load', 1.0)))


def load_lookup(run_config: RunConfig, working_dir: Optional[str] = None) -> ElasticityLookup:
    setting = config.get_setting(working_dir) or {}
    return load_or_build_lookup(
        run_config.cell_spec(),
        int(run_config['homogenization']['samples_per_axis']),
        run_config.discretization(),
        run_config.threads,
        working_dir,
        bool(setting.get('cache_enabled', 1)),
    )


def import_fields(run_config: RunConfig):
    d = run_config['domain']
    path = run_config.resolve_path(run_config['problem']['fields_file'])
    return read_fields_csv(
        path.as_posix(), float(d['element_size']), (int(d['nx']), int(d['ny']))
    )


class _Pipeline(object):
    def __init__(self, run_config: RunConfig, working_dir: Optional[str]):
        super(_Pipeline, self).__init__()
        self.rc = run_config
        self.working_dir = working_dir
        self.report = RunReport(run_config)
        self.stage = 'setup'
        self.logger = get_child_logger('latopt.cli.pipeline')
        self.spec = run_config.cell_spec()
        self.domain: Optional[GridDomain] = None
        self.fields: Optional[DesignFields] = None
        self.history: Optional[List[Dict]] = None
        self.lattice: Optional[LatticeGraph] = None
        self.J_homog: Optional[float] = None

    @property
    def h(self) -> float:
        """Physical target edge length"""
        return float(self.rc['compile']['h']) * float(self.rc['domain']['element_size'])

    def run_optimize(self):
        self.stage = 'optimize'
        opt_cfg = self.rc.optimizer_config(config.get_preset_registry(self.working_dir))
        lookup = load_lookup(self.rc, self.working_dir)
        if self.rc['problem'].get('fields_file'):
            self.domain, start = import_fields(self.rc)
        else:
            self.domain, start = self.rc.grid_domain(), None
        bc = load_bc(self.rc, self.domain)

        result = optimize(self.domain, self.spec, bc, opt_cfg, lookup, start)
        self.fields, self.history, self.J_homog = result.fields, result.history, result.J
        alpha0 = feasible_isotropic_alpha(opt_cfg.vbar, self.spec)
        registry = config.get_preset_registry(self.working_dir) or {}
        reference = {p['preset_id']: p.get('reference_J') for p in registry.get('presets', [])}
        self.report.results.update(result.summary())
        self.report.results.update(
            {
                'preset': self.rc.preset,
                'reference_J': reference.get(self.rc.preset),
                'uniform_J': uniform_reference(self.domain, self.spec, lookup, bc, alpha0, opt_cfg),
                'uniform_reference_J': registry.get('uniform_reference_J'),
                'uniform_alpha': alpha0,
            }
        )
        self.report.timings.update(result.timings)

    def run_compile(self):
        self.stage = 'compile'
        if self.fields is None:
            self.domain, self.fields = import_fields(self.rc)
        c = self.rc['compile']
        mask = threshold_shape(self.fields, self.domain, float(c['tau']))
        graph = build_compilation_graph(self.fields, self.domain, mask, int(c['refine']), self.h)
        iterations = int(c['iters_2d'] if graph.dim == 2 else c['iters_3d'])
        compiler = LatticeCompiler(int(c['seed']), iterations, self.rc.serial, self.rc.threads)
        self.lattice = compiler.compile(graph)
        self.report.timings.update(compiler.timings)
        self.report.counts = {
            'graph_vertices': graph.n_vertices,
            'graph_edges': graph.n_edges,
            'vertices': self.lattice.n_vertices,
            'struts': self.lattice.n_edges,
        }
        self.report.diagnostics = dict(self.lattice.diagnostics)
        self.report.results['parameterization_energy'] = compiler.energy

    def run_validate(self):
        self.stage = 'validate'
        v = self.rc['validate']
        if self.lattice is None:
            path = self.rc.resolve_path(v.get('lattice_file', ''))
            if path is None:
                raise ConfigError('Validation needs validate.lattice_file')
            self.lattice = read_lattice_json(path.as_posix())
        if self.fields is None:
            self.domain, self.fields = import_fields(self.rc)
        bc = load_bc(self.rc, self.domain)
        if self.J_homog is None:
            opt_cfg = self.rc.optimizer_config(config.get_preset_registry(self.working_dir))
            state = assemble_and_solve(
                self.domain,
                self.fields,
                load_lookup(self.rc, self.working_dir),
                bc,
                opt_cfg.p,
                opt_cfg.phi_min,
                opt_cfg.solver,
            )
            self.J_homog = state.compliance(bc.F)
        t0 = time.time()
        result: ValidationResult = rasterize_and_validate(
            self.lattice,
            self.spec,
            self.domain.with_mask(None),
            bc,
            self.J_homog,
            self.h,
            int(v['factor']),
            int(v['max_nx']),
            int(v['max_ny']),
            float(v.get('tolerance', 0.1)),
            bool(self.rc['homogenization']['plane_stress']),
        )
        self.report.timings['T_validate'] = time.time() - t0
        self.report.validation = result.to_dict()

    def run(self, out: Path) -> RunReport:
        t_start = time.time()
        mode = self.rc.mode
        if mode in ('optimize', 'full'):
            self.run_optimize()
        if mode in ('compile', 'full'):
            self.run_compile()
        if mode == 'validate' or (mode == 'full' and self.rc['validate'].get('enabled')):
            self.run_validate()
        self.stage = 'export'
        self.report.timings['T_Total'] = time.time() - t_start
        export_all(
            out,
            self.report,
            self.domain,
            self.fields if mode != 'validate' else None,
            self.history,
            self.lattice if mode != 'validate' else None,
            strut_width(self.spec, self.h),
        )
        return self.report


def run_pipeline(run_config: RunConfig, working_dir: Optional[str] = None) -> RunReport:
    """Optimize, threshold, build the frame graph, compile, validate and export as the mode asks

    Raises:
        LatoptError: after writing failure.json and the artifacts finished so far
    """
    logger = get_child_logger('latopt.cli.pipeline')
    run_config.validate()
    out = output_path(run_config, working_dir)
    pipeline = _Pipeline(run_config, working_dir)
    logger.info(f'Run mode {run_config.mode}, preset {run_config.preset}, output {out}')
    try:
        report = pipeline.run(out)
    except LatoptError as e:
        logger.error(f'Stage {pipeline.stage} failed: {e}')
        logger.error(traceback.format_exc())
        partial_fields = getattr(e, 'last_fields', None)
        if partial_fields is not None and pipeline.domain is not None:
            pipeline.fields = partial_fields
            pipeline.history = getattr(e, 'history', None)
        try:
            export_all(
                out, pipeline.report, pipeline.domain, pipeline.fields, pipeline.history
            )
        except (LatoptError, OSError) as export_error:
            logger.error(f'Could not export partial artifacts: {export_error}')
        write_failure(out, pipeline.stage, e)
        raise
    logger.info(f'Wrote {", ".join(report.artifacts)} to {out}')
    return report
