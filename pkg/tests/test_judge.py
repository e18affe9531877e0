import pytest
from hypothesis import given
from hypothesis import strategies as st

from dreamplan.core import Action, ScoredTrajectory, SimulatedTrajectory, StateChange
from dreamplan.env import WebEnv, load_fixture
from dreamplan.judge import (
    AllSamplesMalformed,
    LLMJudge,
    MalformedJudgement,
    OracleJudge,
    aggregate_samples,
    lexical_action_score,
    parse_judgement,
)
from dreamplan.wm import OracleWorldModel, SimConfig
from oracles import bfs_distance, raw_site


def verdict(status, track):
    return f'Thoughts: hmm.\nStatus: "{status}"\nOn the right track to success: "{track}"'


@pytest.mark.parametrize("text,score", [
    (verdict("success", "yes"), 1.0),
    (verdict("failure", "yes"), 0.5),
    (verdict("failure", "no"), 0.0),
    ("STATUS: Success\non the right track to success: NO", 1.0),
    ("Status: **failure**\nOn the right track to success: `yes`", 0.5),
])
def test_parse_judgement(text, score):
    assert parse_judgement(text) == score


@pytest.mark.parametrize("text", ["Status: success", "On the right track to success: yes", "", "Status: maybe\nOn the right track to success: yes"])
def test_parse_judgement_malformed(text):
    with pytest.raises(MalformedJudgement):
        parse_judgement(text)


def test_malformed_samples_are_excluded():
    assert aggregate_samples([verdict("success", "yes"), "garbage", verdict("failure", "no")]) == (1.0, 0.0)
    with pytest.raises(AllSamplesMalformed):
        aggregate_samples(["x", "y"])


verdicts = st.sampled_from([verdict("success", "yes"), verdict("failure", "yes"), verdict("failure", "no"), "junk"])


@given(st.lists(verdicts, min_size=1, max_size=8))
def test_aggregate_bounds(texts):
    try:
        samples = aggregate_samples(texts)
    except AllSamplesMalformed:
        assert all(t == "junk" for t in texts)
        return
    t = SimulatedTrajectory("r", Action.click(1), (), 1)
    agg = ScoredTrajectory(t, samples).aggregate
    assert 0.0 <= agg <= 1.0
    assert min(samples) <= agg <= max(samples)


@given(st.lists(st.sampled_from([0.0, 0.5, 1.0]), min_size=1, max_size=6), st.data())
def test_aggregate_monotone_in_each_sample(samples, data):
    i = data.draw(st.integers(0, len(samples) - 1))
    bumped = list(samples)
    bumped[i] = min(1.0, bumped[i] + 0.5)
    t = SimulatedTrajectory("r", Action.click(1), (), 1)
    assert ScoredTrajectory(t, tuple(bumped)).aggregate >= ScoredTrajectory(t, tuple(samples)).aggregate


def test_llm_judge_mean_of_samples(shop_env, canned):
    t, gw = canned([verdict("success", "yes"), verdict("failure", "yes"), verdict("failure", "no")])
    j = LLMJudge(gw, samples=3)
    traj = SimulatedTrajectory(shop_env.observe().digest(), Action.click(1),
                               ((StateChange("opens", 1, Action.click(1)), None),), 1)
    s = j.score_trajectory(shop_env.task, shop_env.observe(), [], traj, n=3, screenshots=["s0"])
    assert s.samples == (1.0, 0.5, 0.0) and s.aggregate == 0.5
    assert t.requests[0].n_samples == 3  # one screenshot: every jitter is the same request


def test_llm_judge_jitters_screenshot_order(shop_env, canned):
    t, gw = canned(verdict("failure", "yes"))
    j = LLMJudge(gw, samples=3)
    traj = SimulatedTrajectory("r", Action.click(1), ((StateChange("opens", 1, Action.click(1)), None),), 1)
    s = j.score_trajectory(shop_env.task, shop_env.observe(), [], traj, screenshots=["a", "b"])
    assert s.samples == (0.5, 0.5, 0.5)
    orders = [r.messages[1].image_refs for r in t.requests]
    assert orders == [("a", "b"), ("b", "a")]
    assert [r.n_samples for r in t.requests] == [2, 1]
    assert all(r.temperature == 0.0 for r in t.requests)


def test_llm_judge_all_malformed(shop_env, canned):
    _, gw = canned("no verdict here")
    traj = SimulatedTrajectory("r", Action.click(1), ((StateChange("opens", 1, Action.click(1)), None),), 1)
    with pytest.raises(AllSamplesMalformed):
        LLMJudge(gw).score_trajectory(shop_env.task, shop_env.observe(), [], traj)


def _oracle_score(env, candidate, horizon=1):
    wm = OracleWorldModel(env, SimConfig(horizon=horizon))
    traj = wm.simulate(env.observe(), candidate, env.task)
    return OracleJudge(env).score_trajectory(env.task, env.observe(), [], traj).aggregate


def test_oracle_judge_progress_scores():
    g = load_fixture("shop-small")
    env = WebEnv(g)
    env.reset(g.tasks["find-red-dress"])
    site = raw_site("shop-small")
    # reference distances: start 3, after click [2] 2, after click [1] inf
    assert bfs_distance(site, "find-red-dress") == 3
    assert bfs_distance(site, "find-red-dress", page="women") == 2
    assert _oracle_score(env, Action.click(2)) == 0.5
    assert _oracle_score(env, Action.click(1)) == 0.0
    assert _oracle_score(env, Action.click(999)) == 0.0


def test_oracle_judge_goal_and_stop():
    g = load_fixture("shop-small")
    env = WebEnv(g)
    env.reset(g.tasks["find-red-dress"])
    env.replay([Action.click(2), Action.click(30)])
    assert _oracle_score(env, Action.click(40)) == 1.0
    env.replay([Action.click(2), Action.click(30), Action.click(40)])
    assert _oracle_score(env, Action.stop("$19.99")) == 1.0
    assert _oracle_score(env, Action.stop("$5")) == 0.0
    assert _oracle_score(env, Action.click(50)) == 0.0


@pytest.mark.parametrize("site", ["shop-small", "trap-site", "checkout", "forum", "tutorial-chain"])
def test_goal_reaching_trajectories_outscore_others(site):
    g = load_fixture(site)
    for task in g.tasks.values():
        env = WebEnv(g)
        env.reset(task)
        scores = {}
        for t in g.outgoing(task.start_page):
            wm = OracleWorldModel(env, SimConfig(horizon=3))
            traj = wm.simulate(env.observe(), t.action, task)
            sc = OracleJudge(env).score_trajectory(task, env.observe(), [], traj).aggregate
            goal, last = g.goals[task.id], traj.actions[-1]
            reached = goal.rewarded(traj.end_state, last) if last.kind == "stop" else goal.state_satisfies(traj.end_state)
            scores[t.signature] = (reached, sc)
        for r1, s1 in scores.values():
            for r2, s2 in scores.values():
                if r1 and not r2:
                    assert s1 > s2


def test_oracle_judge_needs_oracle_trajectory(shop_env):
    bare = SimulatedTrajectory("r", Action.click(1), ((StateChange("x", 1, Action.click(1)), None),), 1)
    with pytest.raises(ValueError):
        OracleJudge(shop_env).score_trajectory(shop_env.task, shop_env.observe(), [], bare)


def test_lexical_direct_scores(trap):
    env = WebEnv(trap)
    obs = env.reset(trap.tasks["cheapest-paris-flight"])
    task = env.task
    assert lexical_action_score(task, obs, Action.click(1)) == 0.5   # "Paris" deals lure
    assert lexical_action_score(task, obs, Action.click(2)) == 0.5   # "Flights"
    assert lexical_action_score(task, obs, Action.click(3)) == 0.0
    obs = env.replay([Action.click(2), Action.type_text(30, "Paris")])
    assert lexical_action_score(task, obs, Action.stop("$412")) == 1.0
    assert lexical_action_score(task, obs, Action.stop("$999")) == 0.0


def test_state_value(trap):
    env = WebEnv(trap)
    task = trap.tasks["cheapest-paris-flight"]
    obs = env.reset(task)
    j = OracleJudge(env)
    assert j.score_state(task, obs, []) == 0.0
    assert j.score_state(task, env.replay([Action.click(2)]), []) == 0.5
    assert j.score_state(task, env.replay([Action.click(2), Action.type_text(30, "Paris")]), []) == 1.0
    assert j.score_state(task, env.replay([Action.click(1)]), []) == 0.0
