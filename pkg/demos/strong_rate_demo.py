"""Strong temporal convergence on a reduced sample budget.

Runs the CI-sized trace-class preset (64 paths) and prints the error
table with the fitted log-log order. Takes a few seconds.
"""

from spdefem import cli, harness

cfg, _ = cli.parse_document(cli.load_document("trace_class_ci"))
report = harness.strong_rate_study(cfg)

print(f"strong errors at T = {cfg.T}, {cfg.samples} paths, s = {cfg.s}")
print(f"{'tau':>12} {'h':>8} {'error':>12} {'stderr':>10}")
for res, tau, h, err, se in zip(report.resolutions, report.taus, report.hs,
                                report.errors, report.stderrs):
    print(f"{tau:12.6f} {h:8.4f} {err:12.6e} {se:10.2e}")
print(f"\nfitted order {report.fitted_order:.3f} +/- {report.fit_stderr:.3f}, "
      f"window {report.window}, passed: {report.passed}")
