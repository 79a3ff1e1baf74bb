"""Model parameters, unit conversion, and derived constants.

Everything downstream works in SI units (Watts, Joules, seconds, Hz).
dBm values are accepted only at the configuration boundary (config files
and CLI flags) and converted on ingest.
"""

import math
from dataclasses import dataclass, fields, replace


class ParameterError(ValueError):
    """One or more parameter invariants are violated.

    `fields` lists the offending field names; `violations` the full messages.
    """

    def __init__(self, violations):
        self.violations = list(violations)
        self.fields = [v.split(":", 1)[0] for v in self.violations]
        super().__init__("invalid parameters: " + "; ".join(self.violations))


@dataclass(frozen=True)
class SystemParams:
    """Physical and traffic parameters of one operating point.

    beta:      data packet length, bits
    T:         slot duration, seconds
    tau:       sensing duration, seconds (0 < tau < T)
    W:         channel bandwidth, Hz
    N0:        noise power spectral density, W/Hz
    e_pkt:     energy per stored energy packet, Joules
    P_max:     primary transmit power cap, Watts
    lambda_p:  primary packet arrival probability per slot (Bernoulli mean)
    lambda_e:  ambient harvest rate, energy packets per slot (Poisson rate)
    eta:       RF-to-DC conversion efficiency, 0..1
    E_max:     energy queue capacity, packets
    G:         energy packets spent per secondary transmission
    sigma_ppd: mean gain of the primary -> primary-destination link
    sigma_ps:  mean gain of the primary -> secondary link
    sigma_ssd: mean gain of the secondary -> secondary-destination link
    """

    beta: float
    T: float
    tau: float
    W: float
    N0: float
    e_pkt: float
    P_max: float
    lambda_p: float
    lambda_e: float
    eta: float
    E_max: int
    G: int
    sigma_ppd: float
    sigma_ps: float
    sigma_ssd: float


@dataclass(frozen=True)
class DerivedConstants:
    """Constants computed once from a validated SystemParams.

    R_p, R_s:  primary / secondary spectral efficiency, bits/s/Hz
    a:         minimum channel gain for a primary transmission
    alpha:     energy-packet quantization constant; None when eta == 0
    lambda_x:  rate of the primary->secondary gain (1/sigma_ps)
    lambda_y:  rate of the primary->destination gain (1/sigma_ppd)
    p_min_num: N0*W*(2**R_p - 1), numerator of the channel-inversion power
    rf_degenerate: True when eta == 0, i.e. RF harvesting yields 0 packets
    """

    R_p: float
    R_s: float
    a: float
    alpha: float | None
    lambda_x: float
    lambda_y: float
    p_min_num: float
    rf_degenerate: bool


def dbm_to_watts(p_dbm):
    """Convert a power in dBm to Watts."""
    return 10.0 ** ((p_dbm - 30.0) / 10.0)


def watts_to_dbm(p_watts):
    """Convert a power in Watts to dBm."""
    if p_watts <= 0:
        raise ValueError("power must be > 0 to express in dBm")
    return 30.0 + 10.0 * math.log10(p_watts)


def validate(params: SystemParams) -> SystemParams:
    """Return `params` unchanged if every invariant holds.

    Raises ParameterError naming every violated field, not just the first.
    """
    v = []
    if not params.beta > 0:
        v.append(f"beta: must be > 0 (got {params.beta})")
    if not params.W > 0:
        v.append(f"W: must be > 0 (got {params.W})")
    if not params.N0 > 0:
        v.append(f"N0: must be > 0 (got {params.N0})")
    if not params.e_pkt > 0:
        v.append(f"e_pkt: must be > 0 (got {params.e_pkt})")
    if not params.P_max > 0:
        v.append(f"P_max: must be > 0 (got {params.P_max})")
    if not 0 < params.tau < params.T:
        v.append(f"tau: must satisfy 0 < tau < T (got tau={params.tau}, T={params.T})")
    if not 0 <= params.lambda_p <= 1:
        v.append(f"lambda_p: must lie in [0, 1] (got {params.lambda_p})")
    if not params.lambda_e >= 0:
        v.append(f"lambda_e: must be >= 0 (got {params.lambda_e})")
    if not 0 <= params.eta <= 1:
        v.append(f"eta: must lie in [0, 1] (got {params.eta})")
    if not (isinstance(params.E_max, int) and params.E_max >= 1):
        v.append(f"E_max: must be an integer >= 1 (got {params.E_max})")
    if not (isinstance(params.G, int) and 1 <= params.G) or (
        isinstance(params.E_max, int) and params.E_max >= 1 and params.G > params.E_max
    ):
        v.append(f"G: must be an integer in 1..E_max (got G={params.G}, E_max={params.E_max})")
    for name in ("sigma_ppd", "sigma_ps", "sigma_ssd"):
        if not getattr(params, name) > 0:
            v.append(f"{name}: must be > 0 (got {getattr(params, name)})")
    if v:
        raise ParameterError(v)
    return params


def derive(params: SystemParams) -> DerivedConstants:
    """Compute the derived constants used by every other module.

    eta == 0 is legal: alpha is left undefined and flagged so the RF harvest
    distribution degenerates to a point mass at zero packets instead of
    dividing by zero.
    """
    R_p = params.beta / (params.T * params.W)
    R_s = params.beta / ((params.T - params.tau) * params.W)
    p_min_num = params.N0 * params.W * (2.0 ** R_p - 1.0)
    a = p_min_num / params.P_max
    if params.eta > 0:
        alpha = params.e_pkt / (params.eta * p_min_num * params.T)
        degenerate = False
    else:
        alpha = None
        degenerate = True
    return DerivedConstants(
        R_p=R_p,
        R_s=R_s,
        a=a,
        alpha=alpha,
        lambda_x=1.0 / params.sigma_ps,
        lambda_y=1.0 / params.sigma_ppd,
        p_min_num=p_min_num,
        rf_degenerate=degenerate,
    )


# Reference operating point used by the bundled experiment presets.
_DEFAULTS = dict(
    beta=1000.0,
    T=1.0,
    tau=0.1,
    W=1000.0,
    N0=1e-6,
    e_pkt=1e-3,
    P_max=dbm_to_watts(10.0),
    lambda_p=0.4,
    lambda_e=0.0,
    eta=0.6,
    E_max=10,
    G=1,
    sigma_ppd=0.5,
    sigma_ps=1.0,
    sigma_ssd=1.0,
)


def default_params(**overrides) -> SystemParams:
    """Validated SystemParams at the reference operating point, with overrides."""
    return validate(replace(SystemParams(**_DEFAULTS), **overrides))


_FIELD_TYPES = {f.name: f.type for f in fields(SystemParams)}
_INT_FIELDS = {"E_max", "G"}


def _coerce(key, value):
    if key in _INT_FIELDS:
        f = float(value)
        i = int(round(f))
        if abs(f - i) > 1e-9:
            raise ParameterError([f"{key}: must be an integer (got {value})"])
        return i
    return float(value)


def parse_config_file(path) -> dict:
    """Parse a flat `key = value` configuration file into a field dict.

    One assignment per line; blank lines and `#` comments are ignored. Keys
    must name SystemParams fields. A key with a `_dbm` suffix (e.g.
    `p_max_dbm`) is converted to Watts and assigned to the base field.
    """
    out = {}
    with open(path) as fh:
        for lineno, raw in enumerate(fh, start=1):
            line = raw.split("#", 1)[0].strip()
            if not line:
                continue
            key, sep, value = line.partition("=")
            if not sep:
                raise ParameterError([f"line {lineno}: expected `key = value` (got {raw.strip()!r})"])
            key = key.strip()
            value = value.strip()
            if key.lower().endswith("_dbm"):
                base = _match_field(key[:-4], lineno)
                if base.lower() != "p_max":
                    raise ParameterError([f"line {lineno}: dBm ingest only applies to power fields (got {key!r})"])
                converted = dbm_to_watts(float(value))
                _set_once(out, base, converted, lineno)
            else:
                base = _match_field(key, lineno)
                _set_once(out, base, _coerce(base, value), lineno)
    return out


def _match_field(key, lineno):
    for name in _FIELD_TYPES:
        if name.lower() == key.lower():
            return name
    raise ParameterError([f"line {lineno}: unknown parameter {key!r}"])


def _set_once(out, key, value, lineno):
    if key in out:
        raise ParameterError([f"line {lineno}: {key!r} assigned more than once (dBm and linear forms conflict)"])
    out[key] = value


def load_params(path=None, overrides=None) -> SystemParams:
    """Build validated SystemParams from defaults <- config file <- overrides."""
    merged = dict(_DEFAULTS)
    if path is not None:
        merged.update(parse_config_file(path))
    if overrides:
        for key, value in overrides.items():
            if key not in _FIELD_TYPES:
                raise ParameterError([f"{key}: unknown parameter"])
            merged[key] = _coerce(key, value)
    return validate(SystemParams(**merged))
