import pytest
from hypothesis import given
from hypothesis import strategies as st

from dreamplan.core import (
    Action,
    ElementRecord,
    MalformedAction,
    MissingSummaryPhrase,
    Observation,
    ScoredTrajectory,
    SimulatedTrajectory,
    StateChange,
    action_signature,
    parse_action,
    parse_action_line,
    parse_observation,
    render_element,
    render_observation,
)

free_text = st.text(
    alphabet=st.characters(blacklist_categories=("Cs", "Cc")), min_size=1, max_size=30
).filter(lambda s: s.strip())
ids = st.integers(min_value=0, max_value=10**6)

actions = st.one_of(
    st.builds(Action.click, ids),
    st.builds(lambda e: Action("hover", elem=e), ids),
    st.builds(Action.type_text, ids, free_text, st.booleans()),
    st.builds(lambda k: Action("press", key_comb=k), st.sampled_from(["Ctrl+v", "Enter", "Meta+Shift+t"])),
    st.builds(lambda u: Action("goto", url=u), st.from_regex(r"https?://[a-z]{1,8}\.local/[a-z0-9/]{0,10}", fullmatch=True)),
    st.just(Action("go_back")),
    st.just(Action("go_forward")),
    st.just(Action("new_tab")),
    st.builds(lambda i: Action("tab_focus", tab_index=i), st.integers(0, 9)),
    st.just(Action("tab_close")),
    st.builds(lambda d: Action("scroll", direction=d), st.sampled_from(["up", "down"])),
    st.builds(Action.stop, st.one_of(st.none(), free_text)),
)


@given(actions)
def test_render_parse_round_trip(a):
    assert parse_action_line(a.render()) == a
    completion = f"Let's think step by step. In summary, the next action I will perform is ```{a.render()}```"
    assert parse_action(completion) == a


@given(actions, actions)
def test_signature_identifies_action(a, b):
    assert (action_signature(a) == action_signature(b)) == (a == b)


@pytest.mark.parametrize("line,expected", [
    ("click [1234]", Action.click(1234)),
    ("type [12] [red dress] [0]", Action.type_text(12, "red dress", False)),
    ("type [12] [red dress]", Action.type_text(12, "red dress", True)),
    ("press [Ctrl+v]", Action("press", key_comb="Ctrl+v")),
    ("scroll [Down]", Action("scroll", direction="down")),
    ("close_tab", Action("tab_close")),
    ("stop [N/A]", Action.stop("N/A")),
    ("stop []", Action.stop()),
    ("goto [http://shop.local/women]", Action("goto", url="http://shop.local/women")),
])
def test_grammar_examples(line, expected):
    assert parse_action_line(line) == expected


def test_signature_format():
    assert action_signature(Action.click(1234)) == "click[1234]"
    assert action_signature(Action.type_text(12, "red dress")) == "type[12][red dress][1]"
    assert action_signature(Action("go_back")) == "go_back"


def test_last_summary_phrase_wins():
    text = ("In summary, the next action I will perform is ```click [1]```. On reflection, "
            "In summary, the next action I will perform is ```click [2]```")
    assert parse_action(text) == Action.click(2)


@pytest.mark.parametrize("text,err", [
    ("I would click [12]", MissingSummaryPhrase),
    ("In summary, the next action I will perform is ```fly [3]```", MalformedAction),
    ("In summary, the next action I will perform is ```click [x]```", MalformedAction),
    ("In summary, the next action I will perform is ```click```", MalformedAction),
    ("In summary, the next action I will perform is ```click [1] [2]```", MalformedAction),
])
def test_parse_errors(text, err):
    with pytest.raises(err):
        parse_action(text)


def test_action_validation():
    with pytest.raises(MalformedAction):
        Action("click")
    with pytest.raises(MalformedAction):
        Action("click", elem=-1)
    with pytest.raises(MalformedAction):
        Action("go_back", elem=3)
    with pytest.raises(MalformedAction):
        Action("scroll", direction="left")


def test_element_rendering():
    assert render_element(ElementRecord(1234, "button", "Add to Cart")) == "[1234][button]['Add to Cart']"
    assert render_element(ElementRecord(None, "StaticText", "Sale ends")) == "[][StaticText][Sale ends]"


elements = st.lists(
    st.builds(
        lambda i, tag, txt: ElementRecord(i, tag if i is not None else "StaticText", txt),
        st.one_of(st.none(), ids), st.sampled_from(["link", "button", "textbox", "img"]),
        st.text(alphabet=st.characters(blacklist_categories=("Cs", "Cc")), max_size=20),
    ),
    max_size=8, unique_by=lambda e: e.id if e.id is not None else object(),
)


@given(elements)
def test_observation_round_trip(els):
    obs = Observation("http://x.local/", tuple(els))
    assert parse_observation(render_observation(obs)) == list(obs.elements)


def test_observation_rejects_duplicate_ids():
    with pytest.raises(ValueError):
        Observation("u", (ElementRecord(1, "link", "a"), ElementRecord(1, "link", "b")))


def test_trajectory_invariants():
    c = Action.click(1)
    ch1 = StateChange("opens", 1, c)
    ch2 = StateChange("more", 2, Action.click(2))
    t = SimulatedTrajectory("r", c, ((ch1, Action.click(2)), (ch2, None)), 2)
    assert t.actions == [c, Action.click(2)]
    with pytest.raises(ValueError):
        SimulatedTrajectory("r", c, ((ch1, None), (ch2, None)), 2)
    with pytest.raises(ValueError):
        SimulatedTrajectory("r", Action.click(9), ((ch1, None),), 1)
    with pytest.raises(ValueError):
        SimulatedTrajectory("r", c, ((ch1, Action.click(2)), (ch2, None)), 1)


@given(st.lists(st.sampled_from([0.0, 0.5, 1.0]), min_size=1, max_size=9))
def test_scored_aggregate_is_mean_and_bounded(samples):
    t = SimulatedTrajectory("r", Action.click(1), (), 1)
    s = ScoredTrajectory(t, tuple(samples))
    assert s.aggregate == pytest.approx(sum(samples) / len(samples))
    assert 0.0 <= s.aggregate <= 1.0


def test_scored_rejects_off_scale():
    t = SimulatedTrajectory("r", Action.click(1), (), 1)
    with pytest.raises(ValueError):
        ScoredTrajectory(t, (0.7,))
