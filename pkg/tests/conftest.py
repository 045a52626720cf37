from hypothesis import HealthCheck, settings

# every property runs at least ten thousand generated cases
settings.register_profile("thorough", max_examples=10_000, deadline=None,
                          suppress_health_check=[HealthCheck.too_slow])
settings.load_profile("thorough")

# outcomes of the property suite, read back by the acceptance checks
PROPERTY_OUTCOMES = {}


def pytest_collection_modifyitems(config, items):
    # acceptance checks summarise the other suites, so they run last
    items.sort(key=lambda item: item.module.__name__ == "test_acceptance")


def pytest_runtest_logreport(report):
    if report.when == "call" and "test_properties.py" in report.nodeid:
        PROPERTY_OUTCOMES[report.nodeid] = report.outcome
