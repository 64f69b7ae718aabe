import functools

from hypothesis import HealthCheck, settings

settings.register_profile("lab", deadline=None, max_examples=60,
                          suppress_health_check=[HealthCheck.too_slow])
settings.load_profile("lab")

# one line per acceptance criterion, echoed in the terminal summary
ACCEPTANCE_LINES = []


@functools.lru_cache(maxsize=None)
def synthesized(lam, k, steps, seed=1):
    """Cached synthesis run; returns the result or the raised exception."""
    from diophlab.synth import SynthConfig, run
    try:
        return run(SynthConfig(lam=lam, k=k, steps=steps, seed=seed))
    except Exception as exc:   # kept so every caller sees the same outcome
        return exc


def pytest_terminal_summary(terminalreporter):
    if ACCEPTANCE_LINES:
        terminalreporter.section("acceptance criteria")
        for line in ACCEPTANCE_LINES:
            terminalreporter.write_line(line)
