"""
Stable and unstable evolutions
==============================

Evolves perturbed bound states of the cubic NLKG: at omega=0.9 (d'' > 0) the
orbital distance stays proportional to the perturbation, while at the
degenerate frequency a state on the curve Psi(lam) leaves the tube, and the
A functional decreases at rate P along the way.
"""
import numpy as np

from gsscrit import ModelSpec
from gsscrit.dynamics import monitor_AP_identity, run_instability_experiment, run_stability_experiment

model = ModelSpec.nlkg(3)

rec = run_stability_experiment(model, 0.9, (1e-2, 5e-3), T=50.0, dt=0.01, out_dt=0.5)
for run in rec.runs:
    print(f"omega=0.9 delta={run['delta']:.0e}: max distance {run['max_distance']:.4f}, "
          f"energy drift {run['max_abs_E_drift']:.1e}")

# eta1 < 0 for lam < 0 at the degenerate frequency: those are the escaping states
w0 = np.sqrt(0.5)
rec = run_instability_experiment(model, w0, [-0.05, -0.02], T=200.0, out_dt=0.05, keep_logs=True)
for run, log in zip(rec.runs, rec.logs):
    ap = monitor_AP_identity(log)
    print(f"omega*={w0:.4f} lam={run['lambda']:+.2f}: exit at t={run['exit_time']} "
          f"({run['exit_reason']}), P sign {run['P_sign']:+d} throughout: {run['P_sign_constant']}, "
          f"|dA/dt + P|/max|P| = {ap['relative']:.1e}")
