import sys
from pathlib import Path

import pytest
from hypothesis import HealthCheck, settings

sys.path.insert(0, str(Path(__file__).parent))

from dreamplan.bench.runner import load_sites, make_gateway  # noqa: E402
from dreamplan.env import WebEnv, load_fixture  # noqa: E402
from dreamplan.llm import Gateway, ScriptedSiteModel  # noqa: E402

settings.register_profile("repo", deadline=None, max_examples=60,
                          suppress_health_check=[HealthCheck.function_scoped_fixture])
settings.load_profile("repo")


@pytest.fixture(scope="session")
def graphs():
    return load_sites()


@pytest.fixture(scope="session")
def shop():
    return load_fixture("shop-small")


@pytest.fixture(scope="session")
def trap():
    return load_fixture("trap-site")


@pytest.fixture
def gateway(graphs):
    return make_gateway(graphs.values())


@pytest.fixture
def scripted(graphs):
    return ScriptedSiteModel(graphs.values())


@pytest.fixture
def shop_env(shop):
    env = WebEnv(shop)
    env.reset(shop.tasks["browse-computers"])
    return env


class CannedTransport:
    """Returns queued completions; records every request it sees."""

    supports_n = True

    def __init__(self, *replies):
        self.replies = list(replies)
        self.requests = []

    def __call__(self, req):
        self.requests.append(req)
        reply = self.replies.pop(0) if len(self.replies) > 1 else self.replies[0]
        if isinstance(reply, Exception):
            raise reply
        return list(reply) if isinstance(reply, (list, tuple)) else [reply] * req.n_samples


@pytest.fixture
def canned():
    def make(*replies):
        t = CannedTransport(*replies)
        return t, Gateway(t)
    return make


def pytest_terminal_summary(terminalreporter):
    mod = sys.modules.get("test_acceptance")
    results = getattr(mod, "RESULTS", None)
    if not results:
        return
    terminalreporter.section("acceptance criteria")
    for n in sorted(results):
        terminalreporter.write_line(results[n])
