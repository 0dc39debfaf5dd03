"""Command-line front end wiring the sampling / estimation / RBM pipeline.

Exit codes: 0 success, 2 usage error, 3 data error, 4 size cap exceeded.
Every command that writes files also writes a JSON run manifest with
content hashes; every seeded command is bit-reproducible.
"""
from __future__ import annotations

import csv
import functools
import hashlib
import json
import sys
import time
from pathlib import Path

import click
import numpy as np

from . import __version__
from .infotheory import (
    conditional_mutual_information,
    entropy,
    interaction_information,
    mutual_information,
    nats_to_bits,
    s_topo_kitaev_preskill,
    s_topo_levin_wen,
    s_topo_n,
    EntropyReport,
)
from .interrogate import (
    SizeCapError,
    effective_energy_table,
    interaction_pm1,
    interaction_table_pm1,
    interaction_table_zero_one,
    interaction_zero_one,
    k_indicator_table,
    oracle_moebius_coefficients,
    oracle_parity_coefficients,
)
from .lattice import (
    PM1,
    LoopModel,
    PartitionSpec,
    iid_coin_distribution,
    tc_loop_distribution,
)
from .rbm import TrainConfig, read_params, sample_rbm, train_with_trace, write_params
from .sampling import (
    empirical_distribution,
    read_samples,
    sample_autoregressive,
    samples_to_text,
    write_samples,
)

EXIT_USAGE = 2
EXIT_DATA = 3
EXIT_CAP = 4

_ORACLE_CAP = 14  # brute-force coefficient oracles cost 2**n per subset


def _guarded(fn):
    @functools.wraps(fn)
    def wrapper(*args, **kwargs):
        try:
            return fn(*args, **kwargs)
        except SizeCapError as exc:
            click.echo(f"error: {exc}", err=True)
            sys.exit(EXIT_CAP)
        except (ValueError, OSError) as exc:
            click.echo(f"error: {exc}", err=True)
            sys.exit(EXIT_DATA)
    return wrapper


def _sha256(path) -> str:
    digest = hashlib.sha256()
    with open(path, "rb") as fh:
        for block in iter(lambda: fh.read(1 << 16), b""):
            digest.update(block)
    return digest.hexdigest()


def _write_manifest(manifest_path, command: str, seed, inputs, outputs, started):
    obj = {
        "command": command,
        "version": __version__,
        "seed": seed,
        "inputs": [{"path": str(p), "sha256": _sha256(p)} for p in inputs],
        "outputs": [{"path": str(p), "sha256": _sha256(p)} for p in outputs],
        "timing_seconds": round(time.perf_counter() - started, 6),
    }
    with open(manifest_path, "w", newline="\n") as fh:
        json.dump(obj, fh, indent=2)
        fh.write("\n")


def _parse_partition(text: str) -> PartitionSpec:
    try:
        return PartitionSpec.parse(text)
    except ValueError as exc:
        raise click.UsageError(str(exc)) from None


def _parse_condition(text: str) -> dict[int, int]:
    """'4=+1,7=-1' (1-based) to a 0-based assignment map."""
    out: dict[int, int] = {}
    for chunk in text.split(","):
        parts = chunk.split("=")
        if len(parts) != 2:
            raise click.UsageError(f"bad condition {chunk!r}, expected INDEX=VALUE")
        try:
            idx = int(parts[0])
            val = int(parts[1])
        except ValueError:
            raise click.UsageError(f"bad condition {chunk!r}") from None
        if idx < 1:
            raise click.UsageError("condition indices are 1-based")
        if idx - 1 in out:
            raise click.UsageError(f"variable {idx} conditioned twice")
        out[idx - 1] = val
    return out


def _format_condition(cond: dict[int, int]) -> str:
    def fmt(v: int) -> str:
        return f"+{v}" if v > 0 else str(v)
    return ",".join(f"{i + 1}={fmt(v)}" for i, v in sorted(cond.items()))


@click.group()
@click.version_option(__version__, prog_name="synergy-lab")
def main():
    """Sample constrained loop models, estimate higher-order information,
    train RBMs on the samples, and read effective couplings back out.

    SYNERGY_LAB_THREADS caps internal worker threads (default: all cores);
    SYNERGY_LAB_BACKEND selects the compiled or numpy kernels.
    """


@main.command()
@click.option("--loop", "loop_length", type=int, default=None,
              help="Length of a parity-constrained loop model.")
@click.option("--iid", "iid_n", type=int, default=None,
              help="Number of independent fair spins (null model).")
@click.option("--parity", type=click.Choice(["+1", "-1"]), default="+1",
              show_default=True, help="Loop spin-product constraint.")
@click.option("--basis", type=click.Choice(["z", "x"]), default="z",
              show_default=True, help="Measurement-axis label (metadata).")
@click.option("--count", type=int, required=True, help="Number of samples.")
@click.option("--seed", type=int, default=0, show_default=True)
@click.option("--out", "out_path", type=click.Path(dir_okay=False), default=None,
              help="Sample file; printed to stdout when omitted.")
@_guarded
def sample(loop_length, iid_n, parity, basis, count, seed, out_path):
    """Draw projective samples from a loop model or an iid null model."""
    started = time.perf_counter()
    if (loop_length is None) == (iid_n is None):
        raise click.UsageError("exactly one of --loop or --iid is required")
    if loop_length is not None:
        model = LoopModel(loop_length, +1 if parity == "+1" else -1, basis)
        dist = tc_loop_distribution(model)
        source = f"tc-loop L={model.length} parity={parity} basis={basis}"
    else:
        dist = iid_coin_distribution(iid_n)
        source = f"iid n={iid_n}"
    samples = sample_autoregressive(dist, count, seed, source=source)
    if out_path is None:
        click.echo(samples_to_text(samples), nl=False)
        return
    write_samples(samples, out_path)
    _write_manifest(str(out_path) + ".manifest.json", "sample", seed,
                    [], [out_path], started)


def _load_distribution(in_path, exact_loop, parity):
    if (in_path is None) == (exact_loop is None):
        raise click.UsageError("exactly one of --in or --exact-loop is required")
    if exact_loop is not None:
        model = LoopModel(exact_loop, +1 if parity == "+1" else -1)
        return tc_loop_distribution(model)
    return empirical_distribution(read_samples(in_path))


def _remap_groups(spec: PartitionSpec, conditioned: dict[int, int],
                  num_vars: int) -> PartitionSpec:
    """Translate original variable indices to post-conditioning positions."""
    gone = sorted(conditioned)
    for g in spec.groups:
        for i in g:
            if i in conditioned:
                raise click.UsageError(
                    f"partition uses variable {i + 1}, which is conditioned on")
            if i >= num_vars:
                raise ValueError(f"partition index {i + 1} exceeds n={num_vars}")
    def newpos(i: int) -> int:
        return i - sum(1 for c in gone if c < i)
    return PartitionSpec(tuple(tuple(newpos(i) for i in g) for g in spec.groups))


_QUANTITY_NAMES = {
    "entropy": "entropy",
    "mi": "mi",
    "cmi": "cmi",
    "in": "interaction_info",
    "kp": "s_topo_kp",
    "lw": "s_topo_lw",
    "stopo-n": "s_topo_n",
}


@main.command()
@click.option("--in", "in_path", type=click.Path(exists=False, dir_okay=False),
              default=None, help="Sample file to estimate from.")
@click.option("--exact-loop", "exact_loop", type=int, default=None,
              help="Use the analytic loop-model distribution of this length.")
@click.option("--parity", type=click.Choice(["+1", "-1"]), default="+1",
              show_default=True)
@click.option("--quantity", type=click.Choice(sorted(_QUANTITY_NAMES)),
              required=True)
@click.option("--partition", "partition_text", required=True,
              help="Groups split by '|', 1-based indices by ',', e.g. '1,2|3'.")
@click.option("--condition", "condition_text", default=None,
              help="Fixed values, e.g. '4=+1,7=-1'.")
@click.option("--units", type=click.Choice(["nats", "bits"]), default="nats",
              show_default=True)
@click.option("--estimator", type=click.Choice(["plug-in", "miller-madow"]),
              default="plug-in", show_default=True)
@click.option("--out", "out_path", type=click.Path(dir_okay=False), default=None,
              help="Also write the report JSON to this file.")
@_guarded
def estimate(in_path, exact_loop, parity, quantity, partition_text,
             condition_text, units, estimator, out_path):
    """Estimate an information quantity over grouped variables."""
    started = time.perf_counter()
    dist = _load_distribution(in_path, exact_loop, parity)
    spec = _parse_partition(partition_text)
    cond = _parse_condition(condition_text) if condition_text else {}
    if cond:
        dist = dist.condition(cond)
    groups = _remap_groups(spec, cond, dist.num_vars + len(cond)).groups

    est = estimator.replace("-", "_")
    n_groups = len(groups)
    need = {"entropy": 1, "mi": 2, "cmi": 3, "kp": 3, "lw": 3}
    if quantity in need and n_groups != need[quantity]:
        raise click.UsageError(
            f"--quantity {quantity} needs exactly {need[quantity]} groups")
    if quantity in ("in", "stopo-n") and n_groups < 2:
        raise click.UsageError(f"--quantity {quantity} needs at least 2 groups")

    if quantity == "entropy":
        value = entropy(dist, groups[0], est)
    elif quantity == "mi":
        value = mutual_information(dist, groups[0], groups[1], est)
    elif quantity == "cmi":
        value = conditional_mutual_information(dist, *groups, estimator=est)
    elif quantity == "in":
        value = interaction_information(dist, groups, est)
    elif quantity == "kp":
        value = s_topo_kitaev_preskill(dist, *groups, estimator=est)
    elif quantity == "lw":
        value = s_topo_levin_wen(dist, *groups, estimator=est)
    else:
        value = s_topo_n(dist, groups, est)

    if units == "bits":
        value = nats_to_bits(value)
    report = EntropyReport(
        quantity=_QUANTITY_NAMES[quantity],
        value=value,
        units=units,
        partition=spec.format(),
        conditioned_on=_format_condition(cond) if cond else None,
        estimator=est,
    )
    text = json.dumps(report.to_json_obj())
    click.echo(text)
    if out_path is not None:
        with open(out_path, "w", newline="\n") as fh:
            fh.write(text + "\n")
        inputs = [in_path] if in_path else []
        _write_manifest(str(out_path) + ".manifest.json", "estimate", None,
                        inputs, [out_path], started)


@main.command()
@click.option("--in", "in_path", type=click.Path(dir_okay=False), required=True)
@click.option("--hidden", type=int, required=True, help="Hidden-layer size.")
@click.option("--lr", type=float, default=0.05, show_default=True)
@click.option("--epochs", type=int, default=2000, show_default=True)
@click.option("--batch", type=int, default=100, show_default=True)
@click.option("--cd", "cd_steps", type=int, default=1, show_default=True,
              help="Gibbs steps per gradient estimate.")
@click.option("--seed", type=int, default=0, show_default=True)
@click.option("--init-scale", type=float, default=0.1, show_default=True)
@click.option("--start", type=click.Choice(["data", "random"]), default="data",
              show_default=True, help="Model-chain start state.")
@click.option("--faithful-alg1", is_flag=True,
              help="Sample the data-side hidden vector instead of its mean.")
@click.option("--out", "out_path", type=click.Path(dir_okay=False), required=True)
@_guarded
def train(in_path, hidden, lr, epochs, batch, cd_steps, seed, init_scale,
          start, faithful_alg1, out_path):
    """Train an RBM on a sample file; writes params and a loss trace."""
    started = time.perf_counter()
    samples = read_samples(in_path)
    config = TrainConfig(learning_rate=lr, epochs=epochs, batch_size=batch,
                         cd_steps=cd_steps, seed=seed, init_scale=init_scale,
                         start=start, faithful_alg1=faithful_alg1)
    params, trace = train_with_trace(samples, hidden, config)
    write_params(params, out_path)
    loss_path = Path(out_path).with_suffix(".loss.csv")
    with open(loss_path, "w", newline="") as fh:
        writer = csv.writer(fh)
        writer.writerow(["epoch", "reconstruction_error"])
        for i, r in enumerate(trace):
            writer.writerow([i, f"{r:.6f}"])
    _write_manifest(str(out_path) + ".manifest.json", "train", seed,
                    [in_path], [out_path, loss_path], started)


@main.command()
@click.option("--params", "params_path", type=click.Path(dir_okay=False),
              required=True)
@click.option("--max-order", type=int, default=None,
              help="Truncate the emitted table at this interaction order.")
@click.option("--subset", "subset_text", default=None,
              help="Single coefficient for these 1-based indices, e.g. '1,2,4'.")
@click.option("--oracle", is_flag=True,
              help="Also run the brute-force oracle and report the discrepancy.")
@click.option("--out", "out_path", type=click.Path(dir_okay=False), default=None,
              help="Table JSON; printed to stdout when omitted.")
@_guarded
def interrogate(params_path, max_order, subset_text, oracle, out_path):
    """Extract effective n-body couplings from trained RBM parameters."""
    started = time.perf_counter()
    params = read_params(params_path)
    pm1 = params.domain == PM1

    if subset_text is not None:
        indices = sorted(int(s) - 1 for s in subset_text.split(","))
        if any(i < 0 for i in indices):
            raise click.UsageError("subset indices are 1-based")
        value = (interaction_pm1(params, indices) if pm1
                 else interaction_zero_one(params, indices))
        obj = {
            "n": params.n_visible,
            "convention": "pm1_parity" if pm1 else "zero_one_moebius",
            "coeffs": [{"subset": [i + 1 for i in indices], "value": value}],
        }
    else:
        table = (interaction_table_pm1(params) if pm1
                 else interaction_table_zero_one(params))
        obj = table.to_json_obj(max_order)
        if oracle:
            if params.n_visible > _ORACLE_CAP:
                raise SizeCapError(
                    f"oracle limited to n_visible <= {_ORACLE_CAP}")
            ref = (oracle_parity_coefficients(effective_energy_table(params))
                   if pm1 else
                   oracle_moebius_coefficients(k_indicator_table(params)))
            obj["oracle_max_abs_diff"] = float(
                np.max(np.abs(table.values - ref.values)))

    text = json.dumps(obj)
    click.echo(text)
    if out_path is not None:
        with open(out_path, "w", newline="\n") as fh:
            fh.write(text + "\n")
        _write_manifest(str(out_path) + ".manifest.json", "interrogate", None,
                        [params_path], [out_path], started)


@main.command("rbm-sample")
@click.option("--params", "params_path", type=click.Path(dir_okay=False),
              required=True)
@click.option("--count", type=int, required=True)
@click.option("--burn-in", type=int, default=1000, show_default=True)
@click.option("--thin", type=int, default=1, show_default=True)
@click.option("--seed", type=int, default=0, show_default=True)
@click.option("--out", "out_path", type=click.Path(dir_okay=False), default=None)
@_guarded
def rbm_sample(params_path, count, burn_in, thin, seed, out_path):
    """Draw visible samples from trained RBM parameters by block Gibbs."""
    started = time.perf_counter()
    params = read_params(params_path)
    samples = sample_rbm(params, count, burn_in=burn_in, thinning=thin, seed=seed)
    if out_path is None:
        click.echo(samples_to_text(samples), nl=False)
        return
    write_samples(samples, out_path)
    _write_manifest(str(out_path) + ".manifest.json", "rbm-sample", seed,
                    [params_path], [out_path], started)


@main.command("reproduce-fig3")
@click.option("--seed", type=int, default=1, show_default=True)
@click.option("--outdir", type=click.Path(file_okay=False), default="fig3-out",
              show_default=True)
@_guarded
def reproduce_fig3(seed, outdir):
    """End-to-end four-spin loop experiment: sample, train, rank, interrogate.

    Draws 5000 loop samples, trains a six-hidden-unit RBM on them, ranks the
    16 visible configurations by trained-model sample frequency (counts.csv)
    and tabulates coupling magnitudes by order (interactions.csv).
    """
    started = time.perf_counter()
    out = Path(outdir)
    out.mkdir(parents=True, exist_ok=True)
    sub = np.random.SeedSequence(seed).generate_state(3, dtype=np.uint64)
    sample_seed, train_seed, gibbs_seed = (int(s) for s in sub)

    model = LoopModel(4, +1, "z")
    dist = tc_loop_distribution(model)
    samples = sample_autoregressive(dist, 5000, sample_seed,
                                    source="tc-loop L=4 parity=+1 basis=z")
    samples_path = out / "tc.samples"
    write_samples(samples, samples_path)

    params, trace = train_with_trace(samples, 6, TrainConfig(seed=train_seed))
    params_path = out / "rbm.json"
    write_params(params, params_path)
    loss_path = out / "rbm.loss.csv"
    with open(loss_path, "w", newline="") as fh:
        writer = csv.writer(fh)
        writer.writerow(["epoch", "reconstruction_error"])
        for i, r in enumerate(trace):
            writer.writerow([i, f"{r:.6f}"])

    # the trained machine is sharp, so the chain hops modes only every few
    # thousand sweeps; heavy thinning keeps the mode counts representative
    drawn = sample_rbm(params, 10000, burn_in=2000, thinning=50, seed=gibbs_seed)
    drawn_path = out / "rbm.samples"
    write_samples(drawn, drawn_path)

    counts_path = out / "counts.csv"
    counts = np.bincount(
        (drawn.rows == -1).astype(np.int64) @ (1 << np.arange(4)), minlength=16)
    order = sorted(range(16), key=lambda k: (-counts[k], k))
    with open(counts_path, "w", newline="") as fh:
        writer = csv.writer(fh)
        writer.writerow(["rank", "sigma1", "sigma2", "sigma3", "sigma4",
                         "count", "frequency", "spin_product"])
        for rank, k in enumerate(order, start=1):
            spins = [1 - 2 * ((k >> i) & 1) for i in range(4)]
            writer.writerow([rank, *spins, int(counts[k]),
                             f"{counts[k] / drawn.count:.6f}",
                             int(np.prod(spins))])

    table = interaction_table_pm1(params)
    interactions_path = out / "interactions.csv"
    with open(interactions_path, "w", newline="") as fh:
        writer = csv.writer(fh)
        writer.writerow(["order", "subset", "coefficient", "abs_coefficient"])
        for subset, value in table.items():
            if not subset:
                continue
            label = "+".join(str(i + 1) for i in subset)
            writer.writerow([len(subset), label, f"{value:.12g}",
                             f"{abs(value):.12g}"])

    outputs = [samples_path, params_path, loss_path, drawn_path,
               counts_path, interactions_path]
    _write_manifest(out / "manifest.json", "reproduce-fig3", seed,
                    [], outputs, started)
    click.echo(f"wrote {len(outputs)} files and manifest.json to {out}")


if __name__ == "__main__":
    main()
