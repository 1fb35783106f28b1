"""Machine-readable reports for the CLI (JSON documents and sweep rows)."""
import json
import math
from dataclasses import replace

import numpy as np

from . import coop, droop
from .network import is_connected
from .scenario import LoadedScenario
from .sim import Mode, conservation_monitor, run_scenario


def jsonable(obj):
    """Recursively convert numpy values, enums and non-finite floats."""
    if isinstance(obj, dict):
        return {str(k): jsonable(v) for k, v in obj.items()}
    if isinstance(obj, (list, tuple)):
        return [jsonable(v) for v in obj]
    if isinstance(obj, np.ndarray):
        return jsonable(obj.tolist())
    if isinstance(obj, (np.bool_, bool)):
        return bool(obj)
    if isinstance(obj, (np.integer,)):
        return int(obj)
    if isinstance(obj, (np.floating, float)):
        x = float(obj)
        return x if math.isfinite(x) else None
    if hasattr(obj, "value") and isinstance(getattr(obj, "value"), str):
        return obj.value
    return obj


def dumps(doc):
    return json.dumps(jsonable(doc), sort_keys=True, indent=2, allow_nan=False) + "\n"


def theta_doc(theta):
    if theta is None:
        return {"status": "Undefined"}
    if math.isinf(theta):
        return {"status": "Infinite"}
    return {"status": "Finite", "value": theta}


def condition_doc(res: coop.ConditionResult):
    doc = {"holds": res.holds, "reason": res.reason, "nu": res.nu}
    doc["theta"] = theta_doc(res.theta) if res.theta_evaluated else None
    return doc


def prediction_doc(pred: coop.SteadyStatePrediction):
    return {"branch": pred.branch, "rc1": pred.rc1, "rc2": pred.rc2, "Uinf": pred.Uinf,
            "Iinf": pred.Iinf, "Udinf": pred.Udinf}


def verdict_doc(v: coop.StabilityVerdict):
    return {
        "classification": v.classification,
        "zero_eigenvalue_count": v.zero_eigenvalue_count,
        "max_nonzero_real_part": v.max_nonzero_real_part,
        "zero_semisimple": v.zero_semisimple,
        "warnings": list(v.warnings),
        "spectrum": [[z.real, z.imag] for z in v.eigenvalues],
    }


def reduce_doc(sc: LoadedScenario):
    return {
        "input_sha256": sc.sha256,
        "network": {"ids": list(sc.ids), "Y": sc.net.Y},
        "Ys": sc.net.Ys,
        "Yc": sc.net.Yc,
        "equivalent_injection": sc.injection,
        "connected": is_connected(sc.net.Yc),
    }


def stability_doc(sc: LoadedScenario):
    """Droop summary plus, with a cooperative section, the requested checks.

    The cooperative prediction starts from ``Im(0) = 0`` and
    ``Ud(0) = primary.Ud``.
    """
    net, pd, cc = sc.net, sc.primary, sc.cooperative
    doc = {"input_sha256": sc.sha256, "ids": list(sc.ids), "connected": is_connected(net.Yc)}
    if pd is None:
        return doc
    Iss, Uss = droop.steady_primary(net, pd)
    try:
        bound = droop.sharing_bound(net, pd)
    except ValueError:
        bound = None
    prim = {"decay_bound": droop.decay_bound(net, pd), "Iss": Iss, "Uss": Uss,
            "sharing_deviation": droop.sharing_deviation(Iss), "sharing_bound": bound}
    if cc is not None:
        prim["ratios"] = Iss / cc.Imax
    doc["primary"] = prim
    if cc is None:
        return doc
    checks = set(sc.checks)
    if "spectral" in checks:
        doc["spectral"] = verdict_doc(coop.semistability_check(coop.build_coop(net, pd, cc), net))
    if "c1" in checks:
        doc["c1"] = condition_doc(coop.check_c1(net, pd, cc))
    if "c2" in checks:
        doc["c2"] = condition_doc(coop.check_c2(net, pd, cc))
    pred = coop.predict_steady(net, pd, cc)
    doc["steady_state"] = prediction_doc(pred)
    if "corollaries" in checks:
        res = coop.corollary_checks(net, pd, cc, pred, (Iss, Uss))
        doc["corollaries"] = {k: {"status": r.status, "detail": r.detail, "values": r.values}
                              for k, r in res.items()}
    return doc


def simulate_doc(sc: LoadedScenario, scenario=None):
    """Run the scenario; return ``(summary_doc, trajectory)``."""
    scenario = scenario or sc.simulation
    traj = run_scenario(scenario)
    n = sc.net.n
    doc = {
        "input_sha256": sc.sha256,
        "ids": list(sc.ids),
        "method": type(scenario.method).__name__,
        "samples": len(traj.times),
        "t_end": traj.times[-1],
        "terminal": {"Im": traj.Im[-1], "Ud": traj.Ud[-1], "U": traj.U[-1], "I": traj.I[-1],
                     "ratios": traj.ratios[-1]},
    }
    cc = scenario.cooperative
    if cc is not None and Mode.COOPERATIVE in traj.modes:
        v_l, _ = coop.null_eigenvectors(sc.net, scenario.primary, cc)
        drift = conservation_monitor(traj, v_l)
        doc["conservation"] = {"absolute": drift.absolute, "normalized": drift.normalized,
                               "samples": drift.samples}
    if traj.modes[-1] is Mode.COOPERATIVE:
        k = len(traj.modes) - 1
        while k > 0 and traj.modes[k - 1] is Mode.COOPERATIVE:
            k -= 1
        pred = coop.predict_steady(sc.net, scenario.primary, cc, traj.Im[k], traj.Ud[k])
        doc["prediction"] = prediction_doc(pred)
        doc["prediction"]["switch_time"] = traj.times[k]
        doc["prediction_deltas"] = {
            "I": float(np.abs(traj.I[-1] - pred.Iinf).max()),
            "U": float(np.abs(traj.U[-1] - pred.Uinf).max()),
            "ratio": float(np.abs(traj.ratios[-1] - pred.rc1).max()) if pred.rc1 else None,
        }
    return doc, traj


SWEEP_PARAMS = ("primary.R", "primary.tau", "primary.Ud", "cooperative.alpha", "cooperative.beta",
                "cooperative.Imax")


def sweep_point(sc: LoadedScenario, param, value):
    """Verdict, largest nonzero real part and ``rc1`` with one parameter set
    to ``value`` on every node."""
    section, field = param.split(".")
    n = sc.net.n
    pd, cc = sc.primary, sc.cooperative
    if section == "primary":
        pd = replace(pd, **{field: np.full(n, value)})
    else:
        cc = replace(cc, **{field: np.full(n, value)})
    verdict = coop.semistability_check(coop.build_coop(sc.net, pd, cc), sc.net)
    pred = coop.predict_steady(sc.net, pd, cc)
    return [value, verdict.classification.value, verdict.max_nonzero_real_part, pred.rc1]
