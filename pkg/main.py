"""Heisenberg SIO Lab 主程序.

命令行入口：把构造（Koch 折线、提升、Cantor 集）与实验（正则性、二次型、
发散扫描、下界扫描、曲率能量、CZ 审计）连接起来，输出结果表和运行清单.

退出码：0 成功，1 参数或校验错误，2 预算超限，3 数值不收敛.
"""

import argparse
import logging
import math
import os
import sys
from typing import Any, Dict, List, Optional, Sequence

# 加载 .env 文件环境变量
from dotenv import load_dotenv

from src.config import Config, merge_configs
from src.curvature import curvature_energy
from src.errors import BudgetExceededError, ConvergenceError, SingularityError, ValidationError
from src.heisenberg import HPoint
from src.kernels import CZParams, check_growth, check_hoelder, check_homogeneity, parse_kernel_spec
from src.koch import (
    PIECES,
    AngleSchedule,
    Explicit,
    PowerLaw,
    build_stage,
    lipschitz_bound,
    max_slope,
    parse_angle,
)
from src.lifts import cantor_build, horizontal_lift, lemma54_scan
from src.measure import DiscreteMeasure, ahlfors_check, from_cantor, from_polyline
from src.report_generator import ReportGenerator, violations_path
from src.sio import (
    cantor_row_sup_sweep,
    kernel_matrix,
    koch_stagewise_form,
    l1_divergence_scan,
    l2_norm_estimate,
    quadratic_form,
    symmetrized_row_sup,
)

load_dotenv()


# 配置日志
logging.basicConfig(
    level=logging.INFO,
    format="%(asctime)s - %(name)s - %(levelname)s - %(message)s",
)
logger = logging.getLogger(__name__)

EXIT_OK = 0
EXIT_VALIDATION = 1
EXIT_BUDGET = 2
EXIT_CONVERGENCE = 3

COMMANDS = [
    "koch-build",
    "lift",
    "regularity",
    "quadform",
    "l1scan",
    "lemma54",
    "stagewise",
    "cantor-rowsup",
    "curvature",
    "czcheck",
]

# 接受 --source 的子命令
MEASURE_COMMANDS = ("lift", "regularity", "quadform", "curvature")


class CLIParser(argparse.ArgumentParser):
    """参数错误时打印用法并以退出码 1 结束."""

    def error(self, message: str):
        self.print_usage(sys.stderr)
        self.exit(EXIT_VALIDATION, f"{self.prog}: 错误: {message}\n")


def setup_logging(debug: bool = False) -> None:
    """设置日志级别.

    Args:
        debug: 是否启用调试模式.
    """
    level = logging.DEBUG if debug else logging.INFO
    logging.getLogger().setLevel(level)


def load_config(config_path: str = "config/config.yaml") -> Config:
    """加载配置.

    Args:
        config_path: 配置文件路径.

    Returns:
        Config 实例.
    """
    # 首先尝试从 YAML 加载
    if os.path.exists(config_path):
        logger.info(f"从 {config_path} 加载配置")
        config = Config.from_yaml(config_path)
    else:
        logger.info("配置文件不存在，使用默认配置")
        config = Config()

    # 然后覆盖环境变量
    return merge_configs(config, Config.from_env())


def build_parser() -> argparse.ArgumentParser:
    """构造命令行解析器，公共参数在每个子命令上都可用."""
    common = CLIParser(add_help=False)
    common.add_argument("--config", default="config/config.yaml", help="配置文件路径")
    common.add_argument("--seed", type=int, help="随机种子")
    common.add_argument("--workers", type=int, help="并行线程数")
    common.add_argument("--out", help="结果表路径")
    common.add_argument("--debug", action="store_true", help="启用调试模式")
    common.add_argument("--kernel", help='核描述，如 "alpha:4" 或 "b"')
    common.add_argument("--alpha", type=float, help="stagewise 的 α 或 curvature 的窗口参数")
    common.add_argument("--epsilon", type=float, help="截断半径 ε")
    common.add_argument("--stages", type=int, help="Koch 级数")
    common.add_argument("--depth", type=int, help="Cantor 深度")
    common.add_argument("--theta-c", type=float, help="θ_n = c/n^e 中的 c")
    common.add_argument("--theta-exp", type=float, help="θ_n = c/n^e 中的 e")
    common.add_argument("--theta", nargs="+", help='显式角度序列，如 "pi/3" "pi/6"')
    common.add_argument("--budget", type=int, help="顶点 / 原子 / 三元组预算")
    common.add_argument(
        "--source", choices=["koch", "cantor"], default="koch", help="测度来源"
    )
    common.add_argument("--subdivisions", type=int, help="每段细分数")
    common.add_argument("--samples", type=int, help="前缀或审计样本数")
    common.add_argument("--n-first", type=int, help="l1scan 起始区间")
    common.add_argument("--n-last", type=int, help="l1scan 终止区间")
    common.add_argument("--quadrature-points", type=int, help="Gauss–Legendre 节点数")
    common.add_argument("--radii", type=float, nargs="+", help="半径列表")
    common.add_argument("--norm", action="store_true", help="quadform 同时估计 L² 范数")

    parser = CLIParser(
        description="Heisenberg SIO Lab - Heisenberg 群上奇异积分与曲率的数值实验"
    )
    subparsers = parser.add_subparsers(dest="command", required=True, metavar="COMMAND")
    for name in COMMANDS:
        subparsers.add_parser(name, parents=[common], help=f"{name} 实验")
    return parser


def apply_flags(config: Config, args: argparse.Namespace) -> Config:
    """命令行参数覆盖配置（参数优先）."""
    if args.seed is not None:
        config.run.seed = args.seed
    if args.workers is not None:
        config.run.workers = args.workers
    if args.debug:
        config.run.debug = True
    if args.kernel is not None:
        config.kernel.spec = args.kernel
    if args.epsilon is not None:
        config.sio.epsilon = args.epsilon
    if args.stages is not None:
        config.koch.stages = args.stages
    if args.depth is not None:
        config.measure.cantor_depth = args.depth
    if args.theta_c is not None:
        config.schedule.theta_c = args.theta_c
        config.schedule.thetas = []
    if args.theta_exp is not None:
        config.schedule.theta_exp = args.theta_exp
        config.schedule.thetas = []
    if args.theta:
        config.schedule.thetas = [t for item in args.theta for t in item.split(",") if t.strip()]
    if args.subdivisions is not None:
        config.measure.subdivisions = args.subdivisions
    if args.samples is not None:
        config.sio.samples = args.samples
        config.kernel.samples = args.samples
    if args.n_first is not None:
        config.sio.n_first = args.n_first
    if args.n_last is not None:
        config.sio.n_last = args.n_last
    if args.quadrature_points is not None:
        config.sio.quadrature_points = args.quadrature_points

    # --alpha、--budget、--radii 的含义随子命令变化
    if args.alpha is not None:
        if args.command == "stagewise":
            config.sio.alpha = args.alpha
        else:
            config.curvature.alpha = args.alpha
    if args.budget is not None:
        if args.command == "curvature":
            config.curvature.budget = args.budget
        elif args.command == "cantor-rowsup" or args.source == "cantor":
            config.measure.cantor_budget = args.budget
        else:
            config.koch.vertex_budget = args.budget
    if args.radii:
        if args.command == "curvature":
            config.curvature.radii = list(args.radii)
        else:
            config.measure.radii = list(args.radii)
    return config


def build_schedule(config: Config) -> AngleSchedule:
    """按配置构造角度序列."""
    if config.schedule.thetas:
        return Explicit(tuple(parse_angle(str(t)) for t in config.schedule.thetas))
    return PowerLaw(config.schedule.theta_c, config.schedule.theta_exp)


def _workers(config: Config) -> Optional[int]:
    return config.run.workers or None


def _j0(config: Config):
    return tuple(tuple(float(v) for v in point) for point in config.koch.j0)


def _koch_lift(config: Config):
    stage = build_stage(
        config.koch.stages,
        build_schedule(config),
        _j0(config),
        config.koch.vertex_budget,
        _workers(config),
    )
    words = [row[3] for row in stage.to_rows()[:-1]]
    return stage, horizontal_lift(stage.vertices, words=words)


def build_measure(config: Config, source: str) -> DiscreteMeasure:
    """按来源构造离散测度."""
    if source == "cantor":
        return from_cantor(cantor_build(config.measure.cantor_depth, config.measure.cantor_budget))
    _, lifted = _koch_lift(config)
    return from_polyline(lifted, config.measure.subdivisions)


def validate_config(config: Config, command: str, source: str = "koch") -> None:
    """在任何计算开始前按各模块的前提条件校验配置.

    Args:
        config: 合并后的配置.
        command: 子命令.
        source: 测度来源.

    Raises:
        ValidationError: 参数越界.
        BudgetExceededError: 构造规模超出预算.
    """
    koch_based = command in ("koch-build", "lemma54", "stagewise") or (
        command in MEASURE_COMMANDS and source == "koch"
    )
    cantor_based = command == "cantor-rowsup" or (command in MEASURE_COMMANDS and source == "cantor")

    if koch_based:
        build_schedule(config)
        if config.koch.stages < 0:
            raise ValidationError(f"级数必须非负: {config.koch.stages}")
        if command not in ("lemma54", "stagewise") and PIECES**config.koch.stages + 1 > config.koch.vertex_budget:
            raise BudgetExceededError(
                f"第 {config.koch.stages} 级需要 {PIECES**config.koch.stages + 1} 个顶点, "
                f"超过预算 {config.koch.vertex_budget}"
            )
    if cantor_based:
        if config.measure.cantor_depth < 0:
            raise ValidationError(f"深度必须非负: {config.measure.cantor_depth}")
        if 2**config.measure.cantor_depth > config.measure.cantor_budget:
            raise BudgetExceededError(
                f"深度 {config.measure.cantor_depth} 需要 {2**config.measure.cantor_depth} 个点, "
                f"超过预算 {config.measure.cantor_budget}"
            )

    if command in ("quadform", "cantor-rowsup", "czcheck"):
        parse_kernel_spec(config.kernel.spec)
    if command in ("quadform", "cantor-rowsup") and config.sio.epsilon < 0:
        raise ValidationError(f"epsilon 必须非负: {config.sio.epsilon}")

    if command == "regularity":
        radii = config.measure.radii
        if not radii:
            raise ValidationError("至少需要一个半径")
        if not config.measure.radius_floor > 0:
            raise ValidationError(f"半径下限必须为正: {config.measure.radius_floor}")
        if min(radii) < config.measure.radius_floor:
            raise ValidationError(f"半径 {min(radii)} 小于下限 {config.measure.radius_floor}")
        if config.measure.center_sample <= 0:
            raise ValidationError(f"center_sample 必须为正: {config.measure.center_sample}")
    elif command == "l1scan":
        if config.sio.n_first > config.sio.n_last:
            raise ValidationError(f"区间序号范围为空: [{config.sio.n_first}, {config.sio.n_last}]")
    elif command == "lemma54":
        if config.koch.stages < 1 or config.sio.samples <= 0:
            raise ValidationError("lemma54 需要 stages ≥ 1 且 samples > 0")
    elif command == "stagewise":
        if not 0 < config.sio.alpha < 1:
            raise ValidationError(f"alpha 必须在 (0, 1) 内: {config.sio.alpha}")
        schedule = build_schedule(config)
        if not schedule.satisfies_angle_condition():
            raise ValidationError(f"角度序列 {schedule.spec} 不满足 Σθ < 1/2")
    elif command == "curvature":
        if not 0 < config.curvature.alpha < 1:
            raise ValidationError(f"alpha 必须在 (0, 1) 内: {config.curvature.alpha}")
        if not config.curvature.radii or min(config.curvature.radii) <= 0:
            raise ValidationError(f"半径必须为正: {config.curvature.radii}")
        if config.curvature.budget <= 0:
            raise ValidationError(f"budget 必须为正: {config.curvature.budget}")


class Outcome:
    """单个子命令的输出."""

    def __init__(self, header: Sequence[str], rows: List[Sequence[Any]], summary: Dict[str, Any],
                 parameters: Dict[str, Any], budgets: Optional[Dict[str, Any]] = None,
                 violations: Optional[List[str]] = None):
        self.header = header
        self.rows = rows
        self.summary = summary
        self.parameters = parameters
        self.budgets = budgets or {}
        self.violations = violations


def run_koch_build(config: Config, args) -> Outcome:
    schedule = build_schedule(config)
    stage = build_stage(config.koch.stages, schedule, _j0(config), config.koch.vertex_budget, _workers(config))
    summary = {
        "vertices": len(stage.vertices),
        "segment_length": stage.segment_length,
        "max_slope": max_slope(stage, _j0(config)),
    }
    try:
        summary["lipschitz_bound"] = lipschitz_bound(schedule, config.koch.lipschitz_head)
    except ValidationError as e:
        logger.warning(f"无法给出 Lipschitz 上界: {e}")
        summary["lipschitz_bound"] = None
    return Outcome(
        ["index", "x", "y", "word"],
        stage.to_rows(),
        summary,
        {"schedule": schedule.spec, "stages": config.koch.stages, "j0": config.koch.j0},
        {"vertex_budget": config.koch.vertex_budget},
    )


def run_lift(config: Config, args) -> Outcome:
    if args.source == "cantor":
        cantor = cantor_build(config.measure.cantor_depth, config.measure.cantor_budget)
        rows = [
            (i, float(t), 0.0, float(t), float(w), "")
            for i, (t, w) in enumerate(zip(cantor.representatives, cantor.weights))
        ]
        parameters = {"source": "cantor", "depth": config.measure.cantor_depth}
        budgets = {"cantor_budget": config.measure.cantor_budget}
    else:
        _, lifted = _koch_lift(config)
        m = from_polyline(lifted, config.measure.subdivisions)
        s = config.measure.subdivisions
        rows = [
            (i, *map(float, point), float(w), lifted.words[i // s] if lifted.words else "")
            for i, (point, w) in enumerate(zip(m.points, m.weights))
        ]
        parameters = {
            "source": "koch",
            "schedule": build_schedule(config).spec,
            "stages": config.koch.stages,
            "subdivisions": s,
        }
        budgets = {"vertex_budget": config.koch.vertex_budget}
    summary = {"atoms": len(rows), "total_mass": math.fsum(row[4] for row in rows)}
    return Outcome(["index", "x", "y", "z", "weight", "word"], rows, summary, parameters, budgets)


def run_regularity(config: Config, args) -> Outcome:
    m = build_measure(config, args.source)
    report = ahlfors_check(
        m,
        config.measure.center_sample,
        config.measure.radii,
        config.measure.radius_floor,
        config.run.seed,
        _workers(config),
    )
    return Outcome(
        ["center", "radius", "ratio"],
        report.rows,
        {"min_ratio": report.min_ratio, "max_ratio": report.max_ratio, "atoms": m.size},
        {
            "source": args.source,
            "radii": config.measure.radii,
            "radius_floor": config.measure.radius_floor,
            "center_sample": config.measure.center_sample,
        },
    )


def run_quadform(config: Config, args) -> Outcome:
    kernel = parse_kernel_spec(config.kernel.spec)
    m = build_measure(config, args.source)
    result = quadratic_form(kernel, m, config.sio.epsilon, _workers(config))
    header = ["epsilon", "value", "points"]
    row: List[Any] = [result.epsilon, result.value, result.point_count]
    summary: Dict[str, Any] = {"value": result.value, "diameter": m.diameter}
    if args.norm:
        a = kernel_matrix(kernel, m, config.sio.epsilon, _workers(config))
        estimate = l2_norm_estimate(
            a, None, config.sio.tolerance, config.sio.max_iterations, config.run.seed, _workers(config)
        )
        header += ["l2_estimate", "schur_bound"]
        row += [estimate, symmetrized_row_sup(a)]
        summary["l2_estimate"] = estimate
    return Outcome(
        header,
        [row],
        summary,
        {"source": args.source, "kernel": kernel.spec, "epsilon": config.sio.epsilon},
    )


def run_l1scan(config: Config, args) -> Outcome:
    result = l1_divergence_scan(
        config.sio.s, (config.sio.n_first, config.sio.n_last), config.sio.quadrature_points
    )
    return Outcome(
        ["n", "value", "partial_sum", "comparator"],
        [row.as_tuple() for row in result.rows],
        {"partial_sum": result.partial_sums[-1], "min_value": min(result.values)},
        {
            "s": config.sio.s,
            "n_first": config.sio.n_first,
            "n_last": config.sio.n_last,
            "quadrature_points": config.sio.quadrature_points,
        },
    )


def run_lemma54(config: Config, args) -> Outcome:
    schedule = build_schedule(config)
    reports = [
        lemma54_scan(schedule, n, config.sio.samples, config.run.seed, _j0(config), _workers(config))
        for n in range(1, config.koch.stages + 1)
    ]
    rows = [
        (r.n, r.min_ratio, r.prefixes, r.pairs, r.exhaustive, r.analytic_constant)
        for r in reports
    ]
    return Outcome(
        ["n", "min_ratio", "prefixes", "pairs", "exhaustive", "analytic_constant"],
        rows,
        {"min_ratio": min(r.min_ratio for r in reports)},
        {"schedule": schedule.spec, "stages": config.koch.stages, "samples": config.sio.samples},
    )


def run_stagewise(config: Config, args) -> Outcome:
    schedule = build_schedule(config)
    result = koch_stagewise_form(
        schedule,
        config.sio.alpha,
        config.koch.stages,
        config.sio.samples,
        config.run.seed,
        _j0(config),
        _workers(config),
    )
    rows = [(*row.as_tuple(), flag) for row, flag in zip(result.rows, result.exhaustive)]
    return Outcome(
        ["n", "value", "partial_sum", "comparator", "exhaustive"],
        rows,
        {"partial_sum": result.partial_sums[-1]},
        {
            "schedule": schedule.spec,
            "alpha": config.sio.alpha,
            "stages": config.koch.stages,
            "samples": config.sio.samples,
        },
    )


def run_cantor_rowsup(config: Config, args) -> Outcome:
    kernel = parse_kernel_spec(config.kernel.spec)
    last = config.measure.cantor_depth
    first = min(config.sio.depth_first, last)
    rows = cantor_row_sup_sweep(
        range(first, last + 1), kernel, config.sio.epsilon, config.measure.cantor_budget, _workers(config)
    )
    return Outcome(
        ["depth", "row_sup", "increment"],
        rows,
        {"max_row_sup": max(row[1] for row in rows)},
        {"kernel": kernel.spec, "depth_first": first, "depth_last": last, "epsilon": config.sio.epsilon},
        {"cantor_budget": config.measure.cantor_budget},
    )


def run_curvature(config: Config, args) -> Outcome:
    m = build_measure(config, args.source)
    index = config.curvature.center_index
    if index < 0:
        index = m.size // 2
    if index >= m.size:
        raise ValidationError(f"中心下标 {index} 超出原子数 {m.size}")
    center = HPoint.from_array(m.points[index])
    reports = [
        curvature_energy(
            m, config.curvature.alpha, center, r, config.curvature.budget, config.run.seed, _workers(config)
        )
        for r in config.curvature.radii
    ]
    rows = [
        (r.radius_cap, r.energy, r.triple_count, r.mode, r.standard_error) for r in reports
    ]
    ratios = [
        b.energy / a.energy if a.energy > 0 else math.nan for a, b in zip(reports, reports[1:])
    ]
    return Outcome(
        ["radius", "energy", "triples", "mode", "standard_error"],
        rows,
        {"growth_ratios": ratios},
        {
            "source": args.source,
            "alpha": config.curvature.alpha,
            "center_index": index,
            "radii": config.curvature.radii,
        },
        {"triple_budget": config.curvature.budget},
    )


def run_czcheck(config: Config, args) -> Outcome:
    kernel = parse_kernel_spec(config.kernel.spec)
    params = CZParams(config.kernel.kappa, config.kernel.beta, config.kernel.c_k)
    samples = config.kernel.samples
    deviation = check_homogeneity(kernel, samples, seed=config.run.seed, workers=_workers(config))
    growth = check_growth(kernel, params, samples, config.run.seed, _workers(config))
    hoelder = check_hoelder(kernel, params, samples, config.run.seed, _workers(config))
    rows = [
        ("homogeneity", deviation, math.nan, 0),
        ("growth", growth.max_ratio, growth.bound, len(growth.violations)),
        ("hoelder", hoelder.max_ratio, hoelder.bound, len(hoelder.violations)),
    ]
    return Outcome(
        ["check", "max_ratio", "bound", "violations"],
        rows,
        {"homogeneity": deviation, "growth": growth.max_ratio, "hoelder": hoelder.max_ratio},
        {"kernel": kernel.spec, "kappa": params.kappa, "beta": params.beta, "c_k": params.c_k, "samples": samples},
        violations=growth.to_lines() + hoelder.to_lines(),
    )


RUNNERS = {
    "koch-build": run_koch_build,
    "lift": run_lift,
    "regularity": run_regularity,
    "quadform": run_quadform,
    "l1scan": run_l1scan,
    "lemma54": run_lemma54,
    "stagewise": run_stagewise,
    "cantor-rowsup": run_cantor_rowsup,
    "curvature": run_curvature,
    "czcheck": run_czcheck,
}


def main(argv: Optional[Sequence[str]] = None) -> int:
    """主函数.

    Args:
        argv: 命令行参数，None 表示使用 sys.argv.

    Returns:
        退出码.
    """
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
    except SystemExit as e:
        return int(e.code or 0)

    setup_logging(args.debug)

    try:
        # 1. 加载配置（YAML < 环境变量 < 命令行）
        config = apply_flags(load_config(args.config), args)
        setup_logging(config.run.debug)

        # 2. 校验配置并运行实验
        validate_config(config, args.command, args.source)
        logger.info(f"运行 {args.command}...")
        outcome = RUNNERS[args.command](config, args)

        # 3. 写出结果表与运行清单
        out = args.out or os.path.join(config.run.out_dir, f"{args.command}.csv")
        generator = ReportGenerator(config.report)
        generator.write_table(out, outcome.header, outcome.rows)
        generator.write_manifest(
            out,
            command=args.command,
            parameters=outcome.parameters,
            seed=config.run.seed,
            budgets=outcome.budgets,
            config_hash=config.config_hash(),
            summary=outcome.summary,
        )
        if outcome.violations is not None:
            generator.write_lines(violations_path(out), outcome.violations)
        return EXIT_OK

    except BudgetExceededError as e:
        logger.error(f"预算超限: {e}")
        return EXIT_BUDGET
    except ConvergenceError as e:
        logger.error(f"数值不收敛: {e} (最后估计 {e.last_estimate})")
        return EXIT_CONVERGENCE
    except (ValidationError, SingularityError, FileNotFoundError) as e:
        logger.error(f"校验错误: {e}")
        return EXIT_VALIDATION
    except Exception as e:
        logger.exception(f"未知错误: {e}")
        return EXIT_VALIDATION


if __name__ == "__main__":
    sys.exit(main())
