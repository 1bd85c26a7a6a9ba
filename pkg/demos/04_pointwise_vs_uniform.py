"""
When the end condition fails
============================

For the ``exmu`` recurrence the rescaled data always lead to the same
limit curve f(x) = (-15x^2 + 22x + 113)/40, which ends at f(1) = 3.  With
terminal value mu = 3 the finite tables converge to f uniformly; any
other mu gives convergence away from x = 1 but a fixed gap at the end.
"""

from stoprule import asymptotics

n_list = [100, 1000, 10000, 100000]
for mu in (3.0, 8 / 3, 10 / 3):
    res = asymptotics.run_conjecture_experiment("exmu", mu, n_list)
    print(f"mu = {mu:.4f}")
    for r in res.runs:
        print(f"   n={r.n:>6}  sup gap {r.gap.sup_gap:.2e}  interior gap {r.gap.interior_gap:.2e}"
              f"  drift {r.terminal_drift:.3f}")

# a second example where only the location of the maximum is predicted
res = asymptotics.run_conjecture_experiment("ei-example", -0.5, [10**5])
run = res.runs[0]
print(f"\nargmax {run.argmax}  (n*theta = {1e5 * res.theta:.3f});  max {run.max_value:.11f} vs f(theta) {res.f_theta:.11f}")
