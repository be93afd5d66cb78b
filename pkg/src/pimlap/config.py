"""Flat dotted-key configuration files.

Lines are ``section.key = value`` with ``#`` comments; values parse as
int, float, bool, comma-separated lists of those, or bare strings.
"""
from __future__ import annotations

from dataclasses import dataclass, field

from .analysis import SweepGrid
from .errors import ConfigError, InvalidArgumentError
from .geometry import DensitySpec, ManifoldModel
from .kernels import kernel_by_name


def _parse_scalar(tok: str):
    tok = tok.strip()
    low = tok.lower()
    if low in ("true", "yes", "on"):
        return True
    if low in ("false", "no", "off"):
        return False
    try:
        return int(tok)
    except ValueError:
        pass
    try:
        return float(tok)
    except ValueError:
        pass
    return tok.strip("\"'")


def parse_config_text(text: str) -> dict:
    out = {}
    for lineno, raw in enumerate(text.splitlines(), 1):
        line = raw.split("#", 1)[0].strip()
        if not line:
            continue
        if "=" not in line:
            raise ConfigError(f"line {lineno}: expected 'key = value'", key=line)
        key, val = line.split("=", 1)
        key = key.strip()
        if not key:
            raise ConfigError(f"line {lineno}: empty key")
        val = val.strip()
        if "," in val:
            out[key] = [_parse_scalar(v) for v in val.split(",") if v.strip()]
        else:
            out[key] = _parse_scalar(val)
    return out


@dataclass
class RunConfig:
    """Typed view over a parsed config dict; builders raise ConfigError with
    the offending key on bad values."""

    raw: dict = field(default_factory=dict)

    @staticmethod
    def load(path) -> "RunConfig":
        try:
            with open(path) as fh:
                text = fh.read()
        except OSError as exc:
            raise ConfigError(f"cannot read config: {exc}") from exc
        return RunConfig(parse_config_text(text))

    def get(self, key, default=None):
        return self.raw.get(key, default)

    def _as_list(self, key, default=None):
        v = self.raw.get(key, default)
        if v is None:
            return None
        return v if isinstance(v, list) else [v]

    def override_seed(self, seed: int):
        """--seed: replaces the sample seed and rebases the sweep seeds."""
        self.raw["sample.seed"] = int(seed)
        nseeds = len(self._as_list("sweep.seeds", [0]))
        self.raw["sweep.seeds"] = [int(seed) + k for k in range(nseeds)]

    def kernel(self):
        family = self.get("kernel.family", "wendland41")
        coeffs = self._as_list("kernel.coeffs")
        try:
            return kernel_by_name(family, coeffs)
        except InvalidArgumentError as exc:
            raise ConfigError(str(exc), key="kernel.family") from exc

    def manifold(self):
        shape = self.get("manifold.shape", "interval")
        try:
            if shape == "interval":
                return ManifoldModel.interval(
                    self.get("manifold.a", 0.0), self.get("manifold.b", 1.0)
                )
            if shape == "circle":
                return ManifoldModel.circle(self.get("manifold.radius", 1.0))
            if shape == "sphere":
                return ManifoldModel.sphere(self.get("manifold.radius", 1.0))
        except InvalidArgumentError as exc:
            raise ConfigError(str(exc), key="manifold.shape") from exc
        raise ConfigError(f"unknown manifold shape {shape!r}", key="manifold.shape")

    def density(self):
        form = self.get("density.form", "uniform")
        try:
            if form == "uniform":
                return DensitySpec("uniform")
            if form == "cosine":
                return DensitySpec("cosine", a=float(self.get("density.a", 0.5)))
            if form == "table":
                vals = self._as_list("density.values")
                if vals is None:
                    raise ConfigError(
                        "table density needs density.values", key="density.values"
                    )
                return DensitySpec("table", table=tuple(float(v) for v in vals))
        except InvalidArgumentError as exc:
            raise ConfigError(str(exc), key="density.form") from exc
        raise ConfigError(f"unknown density form {form!r}", key="density.form")

    def bandwidth(self, n: int, k: int) -> float:
        from .assembly import t_auto

        if self.get("assemble.t_auto", False):
            return t_auto(n, k, float(self.get("assemble.t_scale", 1.0)))
        t = self.get("assemble.t")
        if t is None:
            raise ConfigError("assemble.t missing (or set assemble.t_auto)", key="assemble.t")
        return float(t)

    def storage_for(self, n: int):
        """Storage choice from assemble.dense_threshold, None for automatic."""
        thr = self.get("assemble.dense_threshold")
        if thr is None:
            return None
        return "dense" if n <= int(thr) else "sparse"

    def grid(self) -> SweepGrid:
        n_values = self._as_list("sweep.n_values")
        t_values = self._as_list("sweep.t_values")
        seeds = self._as_list("sweep.seeds", [self.get("sample.seed", 0)])
        if n_values is None:
            raise ConfigError("sweep.n_values missing", key="sweep.n_values")
        if t_values is None:
            raise ConfigError("sweep.t_values missing", key="sweep.t_values")
        try:
            return SweepGrid(
                manifold=self.manifold(),
                density=self.density(),
                kernel=self.kernel(),
                n_values=tuple(int(n) for n in n_values),
                t_values=tuple(float(t) for t in t_values),
                seeds=tuple(int(s) for s in seeds),
                mode=self.get("sweep.mode", "product"),
            )
        except InvalidArgumentError as exc:
            raise ConfigError(str(exc), key="sweep") from exc

    def resolved(self) -> dict:
        """Config echo for summaries: raw keys plus applied defaults."""
        out = dict(self.raw)
        out.setdefault("kernel.family", "wendland41")
        out.setdefault("manifold.shape", "interval")
        out.setdefault("density.form", "uniform")
        return {k: out[k] for k in sorted(out)}
