"""Micro-benchmark harness for the regularizer kernels.

Each cell times one (kernel, variant, n, d, b, q, grad) point. Inputs are
drawn deterministically from the seed and are bitwise identical across
variants at the same grid point, so timing differences are attributable to
the kernel alone. Wall times come from a monotonic clock; warmup repeats
are excluded from the statistics.

Transient-allocation accounting is an analytic estimate from declared
buffer sizes (dominant arrays each kernel materializes), which is what the
working-set tests inspect: the naive paths declare the d x d matrix, the
spectral paths never do.

CSV schema (stable, guarded by the schema_version column and a sidecar
manifest): see CSV_COLUMNS.
"""

from __future__ import annotations

import csv
import hashlib
import json
import math
import time
from dataclasses import dataclass, replace

import numpy as np

from .errors import ConfigError, DimensionError
from .oracle import roff_naive, rsum_from_summary, rsum_grouped_naive, rvar, summary_naive
from .regularizers import (
    RegConfig,
    _center_adjoint,
    _roff_pair_std,
    _roff_self_centered,
    _rsum_pair_grouped,
    _rsum_pair_std,
    _rsum_self_centered,
    _rsum_self_grouped,
    _rvar_raw,
    _std_adjoint,
)
from .batch import standardize_array

KERNELS = ("rsum-cross", "rsum-cov", "roff-cross", "roff-cov", "rvar")
VARIANTS = ("naive", "fft")
SCHEMA_VERSION = 1

CSV_COLUMNS = (
    "schema_version",
    "kernel",
    "variant",
    "n",
    "d",
    "b",
    "q",
    "grad",
    "repeats",
    "warmup",
    "seed",
    "status",
    "mean_ns",
    "std_ns",
    "min_ns",
    "alloc_bytes",
    "times_ns",
)


@dataclass(frozen=True)
class TimingRecord:
    """One benchmark measurement; times_ns holds the post-warmup repeats."""

    kernel: str
    variant: str
    n: int
    d: int
    b: int
    q: int
    grad: bool
    repeats: int
    warmup: int
    seed: int
    times_ns: tuple[int, ...]
    mean_ns: float
    std_ns: float
    min_ns: float
    alloc_bytes: int
    status: str = "ok"

    def __post_init__(self):
        if self.status == "ok":
            if self.repeats < 3 or self.warmup < 1:
                raise ConfigError("need repeats >= 3 after warmup >= 1")
            if len(self.times_ns) != self.repeats:
                raise ConfigError("times_ns length must equal repeats")
            if any(t <= 0 for t in self.times_ns):
                raise ConfigError("times must be positive")
            if self.min_ns > self.mean_ns:
                raise ConfigError("min must not exceed mean")


def _summary_grad_matrix(gv: np.ndarray) -> np.ndarray:
    """gC[j, l] = gv[(l - j) mod d]: scatter the summary gradient back to C."""
    d = gv.size
    gc = np.empty((d, d))
    for j in range(d):
        gc[j] = np.roll(gv, j)
    return gc


def _grouped_summary_value_gradmat(c: np.ndarray, b: int, q: int, want_grad: bool):
    """Value of the grouped regularizer of an explicit matrix, plus dvalue/dC."""
    d = c.shape[0]
    g = math.ceil(d / b)
    if g * b != d:
        padded = np.zeros((g * b, g * b))
        padded[:d, :d] = c
        c = padded
    total = 0.0
    gc = np.zeros_like(c) if want_grad else None
    for i in range(g):
        for j in range(g):
            block = c[i * b:(i + 1) * b, j * b:(j + 1) * b]
            v = summary_naive(block)
            lo = 1 if i == j else 0
            if q == 1:
                total += float(np.sum(np.abs(v[lo:])))
            else:
                total += float(np.sum(v[lo:] ** 2))
            if want_grad:
                gv = np.zeros_like(v)
                gv[lo:] = np.sign(v[lo:]) if q == 1 else 2.0 * v[lo:]
                gc[i * b:(i + 1) * b, j * b:(j + 1) * b] = _summary_grad_matrix(gv)
    if want_grad:
        gc = gc[:d, :d]
    return total, gc


def _rsum_value_gradmat(c: np.ndarray, q: int, want_grad: bool):
    v = summary_naive(c)
    value = rsum_from_summary(v, q)
    if not want_grad:
        return value, None
    gv = np.zeros_like(v)
    gv[1:] = np.sign(v[1:]) if q == 1 else 2.0 * v[1:]
    return value, _summary_grad_matrix(gv)


def _kernel_rsum_cross(xa, xb, b, q, grad, variant, eps=1e-8):
    n, d = xa.shape
    za, _, sa, siga = standardize_array(xa, eps)
    zb, _, sb, sigb = standardize_array(xb, eps)
    if variant == "fft":
        if b == d:
            value, gza, gzb = _rsum_pair_std(za, zb, q)
        else:
            value, gza, gzb = _rsum_pair_grouped(za, zb, q, b)
        if not grad:
            return value
    else:
        c = (za.T @ zb) / (n - 1)
        if b == d:
            value, gc = _rsum_value_gradmat(c, q, grad)
        else:
            value, gc = _grouped_summary_value_gradmat(c, b, q, grad)
        if not grad:
            return value
        gza = (zb @ gc.T) / (n - 1)
        gzb = (za @ gc) / (n - 1)
    ga = _std_adjoint(gza, za, sa, siga, eps)
    gb = _std_adjoint(gzb, zb, sb, sigb, eps)
    return value, ga, gb


def _kernel_rsum_cov(x, b, q, grad, variant):
    n, d = x.shape
    zc = x - x.mean(axis=0)
    if variant == "fft":
        if b == d:
            value, gzc = _rsum_self_centered(zc, q)
        else:
            value, gzc = _rsum_self_grouped(zc, q, b)
        if not grad:
            return value
    else:
        k = (zc.T @ zc) / (n - 1)
        if b == d:
            value, gk = _rsum_value_gradmat(k, q, grad)
        else:
            value, gk = _grouped_summary_value_gradmat(k, b, q, grad)
        if not grad:
            return value
        gzc = (zc @ gk + zc @ gk.T) / (n - 1)
    return value, _center_adjoint(gzc)


def _kernel_roff_cross(xa, xb, grad, eps=1e-8):
    za, _, sa, siga = standardize_array(xa, eps)
    zb, _, sb, sigb = standardize_array(xb, eps)
    value, gza, gzb = _roff_pair_std(za, zb)
    if not grad:
        return value
    return value, _std_adjoint(gza, za, sa, siga, eps), _std_adjoint(gzb, zb, sb, sigb, eps)


def _kernel_roff_cov(x, grad):
    zc = x - x.mean(axis=0)
    value, gzc = _roff_self_centered(zc)
    if not grad:
        return value
    return value, _center_adjoint(gzc)


def _kernel_rvar(x, grad, variant, gamma=1.0, eps_var=1e-4):
    n = x.shape[0]
    if variant == "fft":
        value, gx = _rvar_raw(x, gamma, eps_var)
        return (value, gx) if grad else value
    zc = x - x.mean(axis=0)
    k = (zc.T @ zc) / (n - 1)
    value = rvar(k, gamma, eps_var)
    if not grad:
        return value
    s = np.sqrt(np.maximum(np.diag(k) + eps_var, 0.0))
    active = (s < gamma) & (s > 0)
    gdiag = np.where(active, -0.5 / np.where(s > 0, s, 1.0), 0.0)
    gzc = zc * (2.0 * gdiag / (n - 1))
    return value, _center_adjoint(gzc)


def _two_input_kernel(kernel: str) -> bool:
    return kernel in ("rsum-cross", "roff-cross")


def make_inputs(kernel: str, n: int, d: int, seed: int):
    """Deterministic inputs for a grid point; identical across variants."""
    rng = np.random.Generator(np.random.PCG64(np.random.SeedSequence((seed, n, d))))
    if _two_input_kernel(kernel):
        return rng.standard_normal((n, d)), rng.standard_normal((n, d))
    return (rng.standard_normal((n, d)),)


def _validate_cell(kernel: str, variant: str, n: int, d: int, b: int):
    if kernel not in KERNELS:
        raise ConfigError(f"unknown kernel {kernel!r}")
    if variant not in VARIANTS:
        raise ConfigError(f"unknown variant {variant!r}")
    if kernel.startswith("roff") and variant == "fft":
        raise ConfigError(f"{kernel} is the explicit-matrix baseline; it has no fft variant")
    if n < 2 or d < 1:
        raise DimensionError(f"need n >= 2 and d >= 1, got n={n}, d={d}")
    if not 1 <= b <= d:
        raise ConfigError(f"block size must satisfy 1 <= b <= d, got b={b}, d={d}")
    if kernel in ("roff-cross", "roff-cov", "rvar") and b != d:
        raise ConfigError(f"{kernel} has no grouped form; omit b")


def declared_buffers(kernel: str, variant: str, n: int, d: int, b: int | None = None, grad: bool = False) -> dict[str, int]:
    """Dominant transient buffers (bytes) each kernel variant materializes.

    This is the analytic working-set model: buffer names map to sizes, no
    allocator hooks involved.
    """
    b = d if b is None else b
    _validate_cell(kernel, variant, n, d, b)
    f64, c128 = 8, 16
    half = d // 2 + 1
    bufs: dict[str, int] = {}
    two = _two_input_kernel(kernel)
    views = (2 if two else 1) * n * d * f64
    bufs["work_views"] = views  # standardized or centered copies
    if variant == "naive" or kernel.startswith("roff"):
        bufs["explicit_matrix"] = d * d * f64
        if kernel.startswith("rsum"):
            bufs["summary"] = d * f64
        if grad:
            bufs["matrix_gradient"] = d * d * f64
    elif kernel == "rvar":
        bufs["feature_stats"] = d * f64
    elif b == d:
        bufs["view_spectra"] = (2 if two else 1) * n * half * c128
        bufs["accumulated_spectrum"] = half * c128
        bufs["summary"] = d * f64
        if grad:
            bufs["gradient_spectrum"] = half * c128
    else:
        g = math.ceil(d / b)
        half_b = b // 2 + 1
        bufs["block_spectra"] = (2 if two else 1) * n * g * half_b * c128
        bufs["block_summaries"] = g * g * b * f64
        if grad:
            bufs["block_gradient_spectra"] = g * g * half_b * c128
    if grad:
        bufs["grad_batches"] = views
    return bufs


def run_bench(
    kernel: str,
    variant: str,
    n: int,
    d: int,
    b: int | None = None,
    q: int = 2,
    grad: bool = False,
    repeats: int = 5,
    warmup: int = 1,
    seed: int = 0,
) -> TimingRecord:
    """Time one grid cell; out-of-memory comes back as a failed record."""
    b = d if b is None else b
    _validate_cell(kernel, variant, n, d, b)
    if q not in (1, 2):
        raise ConfigError(f"q must be 1 or 2, got {q}")
    if repeats < 3 or warmup < 1:
        raise ConfigError("need repeats >= 3 and warmup >= 1")
    alloc = sum(declared_buffers(kernel, variant, n, d, b, grad).values())

    def call(inputs):
        if kernel == "rsum-cross":
            return _kernel_rsum_cross(*inputs, b, q, grad, variant)
        if kernel == "rsum-cov":
            return _kernel_rsum_cov(*inputs, b, q, grad, variant)
        if kernel == "roff-cross":
            return _kernel_roff_cross(*inputs, grad)
        if kernel == "roff-cov":
            return _kernel_roff_cov(*inputs, grad)
        return _kernel_rvar(*inputs, grad, variant)

    try:
        inputs = make_inputs(kernel, n, d, seed)
        for _ in range(warmup):
            call(inputs)
        times = []
        for _ in range(repeats):
            t0 = time.perf_counter_ns()
            call(inputs)
            times.append(time.perf_counter_ns() - t0)
    except MemoryError:
        return TimingRecord(
            kernel, variant, n, d, b, q, grad, repeats, warmup, seed,
            times_ns=(), mean_ns=float("nan"), std_ns=float("nan"),
            min_ns=float("nan"), alloc_bytes=alloc, status="oom",
        )
    arr = np.asarray(times, dtype=np.float64)
    return TimingRecord(
        kernel, variant, n, d, b, q, grad, repeats, warmup, seed,
        times_ns=tuple(times), mean_ns=float(arr.mean()),
        std_ns=float(arr.std()), min_ns=float(arr.min()),
        alloc_bytes=alloc, status="ok",
    )


def record_to_row(rec: TimingRecord) -> list[str]:
    return [
        str(SCHEMA_VERSION),
        rec.kernel,
        rec.variant,
        str(rec.n),
        str(rec.d),
        str(rec.b),
        str(rec.q),
        "on" if rec.grad else "off",
        str(rec.repeats),
        str(rec.warmup),
        str(rec.seed),
        rec.status,
        repr(rec.mean_ns),
        repr(rec.std_ns),
        repr(rec.min_ns),
        str(rec.alloc_bytes),
        ";".join(str(t) for t in rec.times_ns),
    ]


def row_to_record(row: dict[str, str]) -> TimingRecord:
    """Parse one CSV row back into a TimingRecord (lossless round trip)."""
    version = int(row["schema_version"])
    if version != SCHEMA_VERSION:
        raise ConfigError(f"unsupported schema version {version}")
    times = tuple(int(t) for t in row["times_ns"].split(";") if t)
    return TimingRecord(
        kernel=row["kernel"],
        variant=row["variant"],
        n=int(row["n"]),
        d=int(row["d"]),
        b=int(row["b"]),
        q=int(row["q"]),
        grad=row["grad"] == "on",
        repeats=int(row["repeats"]),
        warmup=int(row["warmup"]),
        seed=int(row["seed"]),
        times_ns=times,
        mean_ns=float(row["mean_ns"]),
        std_ns=float(row["std_ns"]),
        min_ns=float(row["min_ns"]),
        alloc_bytes=int(row["alloc_bytes"]),
        status=row["status"],
    )


def _manifest_path(out_path: str) -> str:
    return str(out_path) + ".manifest.json"


def _schema_hash() -> str:
    return hashlib.sha256("|".join(CSV_COLUMNS).encode()).hexdigest()


def bench_sweep(cells: list[dict], out_path, append: bool = False) -> list[TimingRecord]:
    """Run every cell and write one CSV row each (stable column order).

    A sidecar manifest records the schema; --append refuses to extend a
    file whose manifest hash does not match the current schema.
    """
    if not cells:
        raise ConfigError("empty benchmark grid")
    manifest_path = _manifest_path(out_path)
    if append:
        try:
            with open(manifest_path) as fh:
                manifest = json.load(fh)
        except OSError as exc:
            raise ConfigError(f"cannot append: missing manifest {manifest_path}") from exc
        if manifest.get("schema_hash") != _schema_hash():
            raise ConfigError("cannot append: schema hash mismatch")
    records = [run_bench(**cell) for cell in cells]
    mode = "a" if append else "w"
    with open(out_path, mode, newline="", encoding="utf-8") as fh:
        writer = csv.writer(fh, lineterminator="\n")
        if not append:
            writer.writerow(CSV_COLUMNS)
        for rec in records:
            writer.writerow(record_to_row(rec))
    if not append:
        with open(manifest_path, "w") as fh:
            json.dump(
                {"schema_version": SCHEMA_VERSION, "schema_hash": _schema_hash()},
                fh,
                indent=2,
            )
            fh.write("\n")
    return records


def read_records(path) -> list[TimingRecord]:
    with open(path, newline="", encoding="utf-8") as fh:
        return [row_to_record(row) for row in csv.DictReader(fh)]
