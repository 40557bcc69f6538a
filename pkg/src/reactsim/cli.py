"""Command-line front end: ``reactsim {eigen,propagate,grape,measure}``.

Configuration files hold ``section.key = value`` lines.  Keys without a
section are read as model parameters, so a plain model file also works.
Exit codes: 0 success, 1 configuration error, 2 threshold failure.
"""
from __future__ import annotations

import argparse
import dataclasses
import json
import sys
from dataclasses import dataclass, field
from pathlib import Path

from . import circuit, control, dynamics, encoding, model

EXIT_OK, EXIT_CONFIG, EXIT_THRESHOLD = 0, 1, 2
ROUTE_TOLERANCE = 1e-8


class ConfigError(ValueError):
    pass


@dataclass(frozen=True)
class GrapeBlock:
    target_step: int = 1
    segment_count: int = 750
    duration_ms: float = 15.0
    fidelity_goal: float = 0.99
    iteration_cap: int = 500
    amplitude_cap_hz: float = 5000.0
    step_policy: str = "lbfgs"
    gradient: str = "exact"
    ensemble: tuple = ((1.0, 1.0),)
    seed: int = 1234


@dataclass(frozen=True)
class RunConfig:
    model: model.ReactionModel = field(default_factory=model.ReactionModel)
    grid_qubits: int = 3
    route: str = "grid"
    output_path: str | None = None
    output_format: str = "csv"
    grape: GrapeBlock = field(default_factory=GrapeBlock)

    def __post_init__(self):
        if not 1 <= self.grid_qubits <= 10:
            raise ConfigError("grid_qubits must be in [1, 10]")
        if self.route not in ("grid", "circuit", "both"):
            raise ConfigError(f"unknown route {self.route!r}")
        if self.output_format not in ("csv", "json"):
            raise ConfigError(f"unknown output format {self.output_format!r}")
        if not 0 <= self.grape.fidelity_goal < 1:
            raise ConfigError("grape.fidelity_goal must be in [0, 1)")


def parse_ensemble(text: str) -> tuple:
    """``"0.95:0.25, 1.0:0.5, 1.05:0.25"`` -> ((0.95, 0.25), ...)."""
    items = []
    for part in text.split(","):
        scale, _, weight = part.strip().partition(":")
        items.append((float(scale), float(weight or 1.0)))
    return tuple(items)


_GRAPE_TYPES = {
    "target_step": int,
    "segment_count": int,
    "duration_ms": float,
    "fidelity_goal": float,
    "iteration_cap": int,
    "amplitude_cap_hz": float,
    "step_policy": str,
    "gradient": str,
    "ensemble": parse_ensemble,
    "seed": int,
}
_RUN_TYPES = {"grid_qubits": int, "route": str, "output_path": str, "output_format": str}


def config_from_text(text: str) -> RunConfig:
    try:
        pairs = model.parse_key_values(text)
        model_keys, run, grape = {}, {}, {}
        for key, value in pairs.items():
            section, _, name = key.rpartition(".")
            if section in ("", "model"):
                model_keys[name] = value
            elif section == "run" and name in _RUN_TYPES:
                run[name] = _RUN_TYPES[name](value)
            elif section == "grape" and name in _GRAPE_TYPES:
                grape[name] = _GRAPE_TYPES[name](value)
            else:
                raise ConfigError(f"unknown configuration key {key!r}")
        return RunConfig(model=model.model_from_mapping(model_keys), grape=GrapeBlock(**grape), **run)
    except ConfigError:
        raise
    except (ValueError, TypeError) as exc:
        raise ConfigError(str(exc)) from exc


def load_config(path) -> RunConfig:
    if path is None:
        return RunConfig()
    try:
        text = Path(path).read_text()
    except OSError as exc:
        raise ConfigError(f"cannot read config: {exc}") from exc
    return config_from_text(text)


# ---------------------------------------------------------------------------
# commands


def _fmt(x) -> str:
    return f"{float(x):.12g}"


def _emit(text: str, out):
    if out is None:
        sys.stdout.write(text)
    else:
        Path(out).write_text(text)


def cmd_eigen(cfg: RunConfig) -> int:
    m = cfg.model
    grid = model.make_grid(m, cfg.grid_qubits)
    tables = {
        "V_diag": model.build_potential_diag(m, grid).values,
        "T_diag": model.build_kinetic_diag(m, grid).values,
        "q_diag": grid.positions,
    }
    count = min(2, grid.point_count)
    pairs = dynamics.lowest_eigenpairs(m, grid, count)
    if cfg.output_format == "json":
        doc = {name: [float(_fmt(x)) for x in vals] for name, vals in tables.items()}
        doc["eigenpairs"] = [
            {
                "energy": float(_fmt(p.energy)),
                "left_probability": float(_fmt(p.state.left_probability())),
                "right_probability": float(_fmt(p.state.right_probability())),
                "amplitudes": [float(_fmt(a.real)) for a in p.state.amplitudes],
            }
            for p in pairs
        ]
        text = json.dumps(doc, indent=1) + "\n"
    else:
        lines = ["table,index,value"]
        for name, vals in tables.items():
            lines += [f"{name},{k},{_fmt(v)}" for k, v in enumerate(vals)]
        for j, p in enumerate(pairs):
            lines.append(f"energy_{j},,{_fmt(p.energy)}")
            lines.append(f"left_probability_{j},,{_fmt(p.state.left_probability())}")
            lines.append(f"right_probability_{j},,{_fmt(p.state.right_probability())}")
            lines += [f"phi{j},{k},{_fmt(a.real)}" for k, a in enumerate(p.state.amplitudes)]
        text = "\n".join(lines) + "\n"
    _emit(text, cfg.output_path)
    return EXIT_OK


def circuit_snapshots(m, grid, phi0, phi1):
    state = encoding.encode_state(phi0)
    snaps = [dynamics.Snapshot(0, 0.0, dynamics.overlap(phi0, phi0), dynamics.overlap(phi0, phi1))]
    for j in range(1, m.step_count + 1):
        state = circuit.run_circuit(circuit.step_circuit(m, grid, j), state)
        psi = encoding.decode_state(state, grid)
        snaps.append(
            dynamics.Snapshot(j, j * m.time_step_fs, dynamics.overlap(psi, phi0), dynamics.overlap(psi, phi1))
        )
    return snaps


def route_discrepancy(a, b) -> float:
    return max(
        max(abs(x.reactant_overlap - y.reactant_overlap), abs(x.product_overlap - y.product_overlap))
        for x, y in zip(a, b)
    )


def cmd_propagate(cfg: RunConfig) -> int:
    m = cfg.model
    grid = model.make_grid(m, cfg.grid_qubits)
    phi0, phi1 = (p.state for p in dynamics.lowest_eigenpairs(m, grid, 2))
    status = EXIT_OK
    if cfg.route in ("grid", "both"):
        snaps, _ = dynamics.propagate(m, grid, phi0, (phi0, phi1))
    if cfg.route in ("circuit", "both"):
        csnaps = circuit_snapshots(m, grid, phi0, phi1)
        if cfg.route == "circuit":
            snaps = csnaps
        else:
            gap = route_discrepancy(snaps, csnaps)
            print(f"route discrepancy: {gap:.3e}", file=sys.stderr)
            if gap > ROUTE_TOLERANCE:
                status = EXIT_THRESHOLD
    text = dynamics.snapshots_to_json(snaps) if cfg.output_format == "json" else dynamics.snapshots_to_csv(snaps)
    _emit(text, cfg.output_path)
    return status


def cmd_grape(cfg: RunConfig) -> int:
    gb = cfg.grape
    m = cfg.model
    grid = model.make_grid(m, cfg.grid_qubits)
    if grid.qubit_count != 3:
        raise ConfigError("GRAPE targets the 3-spin system; use grid_qubits = 3")
    if not 1 <= gb.target_step <= m.step_count:
        raise ConfigError(f"grape.target_step must be in [1, {m.step_count}]")
    if gb.gradient not in ("exact", "first_order"):
        raise ConfigError("grape.gradient must be 'exact' or 'first_order'")
    target = circuit.circuit_unitary(circuit.evolution_circuit(m, grid, gb.target_step))
    spins = control.SpinSystem()
    conf = control.GrapeConfig(
        segment_count=gb.segment_count,
        duration=gb.duration_ms * 1e-3,
        iteration_cap=gb.iteration_cap,
        fidelity_goal=gb.fidelity_goal,
        amplitude_cap=gb.amplitude_cap_hz,
        step_policy=gb.step_policy,
        exact_gradient=gb.gradient == "exact",
        ensemble=gb.ensemble,
        seed=gb.seed,
    )
    result = control.grape_optimize(spins, target, conf)
    out = Path(cfg.output_path or "grape_pulse.csv")
    out.write_text(result.pulse.to_csv(spins))
    out.with_name(out.stem + "_trace.csv").write_text(result.trace_csv())
    print(f"target t_{gb.target_step}: fidelity {result.fidelity:.6f} after {len(result.trace) - 1} iterations")
    return EXIT_OK if result.converged else EXIT_THRESHOLD


MEASURE_FIELDS = (
    "step", "time_fs", "reactant_population_route", "reactant_direct",
    "product_population_route", "product_direct", "peak1", "peak2", "peak3", "peak4",
)


def measurement_rows(m: model.ReactionModel):
    grid = model.make_grid(m, 3)
    phi0, phi1 = (p.state for p in dynamics.lowest_eigenpairs(m, grid, 2))
    r0 = control.diagonalizing_rotation(control.DensityMatrix.pure(phi0.amplitudes))
    psi = phi0
    rows = []
    for j in range(0, m.step_count + 1):
        if j:
            psi = dynamics.split_step(psi, m, j)
        rho = control.DensityMatrix.pure(psi.amplitudes).conjugated(r0)
        peaks = control.population_readout(rho).peak_differences
        rows.append(
            (
                j,
                j * m.time_step_fs,
                control.measure_overlap_via_populations(psi.amplitudes, phi0.amplitudes),
                dynamics.overlap(psi, phi0),
                control.measure_overlap_via_populations(psi.amplitudes, phi1.amplitudes),
                dynamics.overlap(psi, phi1),
                *peaks,
            )
        )
    return rows


def cmd_measure(cfg: RunConfig) -> int:
    rows = measurement_rows(cfg.model)
    if cfg.output_format == "json":
        text = json.dumps([dict(zip(MEASURE_FIELDS, (r[0],) + tuple(float(_fmt(x)) for x in r[1:]))) for r in rows], indent=1) + "\n"
    else:
        text = ",".join(MEASURE_FIELDS) + "\n" + "".join(
            ",".join([str(r[0])] + [_fmt(x) for x in r[1:]]) + "\n" for r in rows
        )
    _emit(text, cfg.output_path)
    return EXIT_OK


COMMANDS = {"eigen": cmd_eigen, "propagate": cmd_propagate, "grape": cmd_grape, "measure": cmd_measure}


def build_parser() -> argparse.ArgumentParser:
    p = argparse.ArgumentParser(prog="reactsim", description=__doc__.splitlines()[0])
    p.add_argument("command", choices=sorted(COMMANDS))
    p.add_argument("--config", help="key-value configuration file")
    p.add_argument("--out", help="output file (stdout if omitted)")
    p.add_argument("--format", choices=("csv", "json"))
    p.add_argument("--route", choices=("grid", "circuit", "both"))
    p.add_argument("--qubits", type=int)
    return p


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    try:
        cfg = load_config(args.config)
        overrides = {
            "output_path": args.out,
            "output_format": args.format,
            "route": args.route,
            "grid_qubits": args.qubits,
        }
        cfg = dataclasses.replace(cfg, **{k: v for k, v in overrides.items() if v is not None})
        return COMMANDS[args.command](cfg)
    except ConfigError as exc:
        print(f"config error: {exc}", file=sys.stderr)
        return EXIT_CONFIG
    except ValueError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_CONFIG


if __name__ == "__main__":
    sys.exit(main())
