import numpy as np
import pytest

import oracles
from entprompt import numerics as N
from entprompt import prompt as P
from entprompt.text import DEFAULT_INSTRUCTION, build_vocabulary

NAMES = ["thalamus", "edema", "pons"]
VOCAB = build_vocabulary(["[global]"] + NAMES, extra=["go"])
D = 6
TABLE = N.Tensor(np.random.default_rng(0).normal(size=(len(VOCAB), D)), requires_grad=True)

# one letter per segment kind, so a layout reads as a string
CODE = {"scan": "s", "entity_embed": "e", "status_embed": "t", "category_embed": "c",
        "instruction_token": "w", "special_token": "x"}


def grammar(n_scans, k, toggles, n_words):
    """Replay the template: [Img] scans [/Img] (name embed [category] [status: S])* [MRG] words."""
    per_entity = ""
    if toggles.entity_embed or toggles.category_words:
        per_entity = "w" + "e" * toggles.entity_embed + "c" * toggles.category_words + "wt" * toggles.status_embed
    return "x" + "s" * n_scans + "x" + per_entity * k + "x" + "w" * n_words


def inputs(seed=0, n=2, k=3):
    rng = np.random.default_rng(seed)
    return rng.normal(size=(n, D)), rng.normal(size=(k, D)), rng.normal(size=(k, D)), rng.normal(size=(k, D))


# --- adaptor --------------------------------------------------------------
def test_adaptor_zero_in_zero_out():
    a = P.AdaptorParams(3, 4, D, np.random.default_rng(0))
    np.testing.assert_array_equal(P.adapt_scans(np.zeros((2, 3, 4)), a).data, 0.0)


def test_adaptor_identity_configuration():
    a = P.AdaptorParams(1, 4, 4, np.random.default_rng(0))
    a.fc1.weight.data[:] = np.eye(4)
    a.fc2.weight.data[:] = np.eye(4)
    x = np.random.default_rng(1).normal(size=(1, 1, 4))
    np.testing.assert_array_equal(P.adapt_scans(x, a).data, x[:, 0])


def test_adaptor_two_affine_oracle():
    a = P.AdaptorParams(3, 4, D, np.random.default_rng(2))
    a.fc1.bias.data[:] = 0.3
    a.fc2.bias.data[:] = -0.1
    x = np.random.default_rng(3).normal(size=(2, 3, 4))
    ref = oracles.lin(a.fc2, oracles.lin(a.fc1, x.reshape(2, 12)))
    np.testing.assert_allclose(P.adapt_scans(x, a).data, ref, rtol=0, atol=1e-12)


def test_adaptor_width_mismatch():
    a = P.AdaptorParams(3, 4, D, np.random.default_rng(0))
    with pytest.raises(N.ShapeError):
        P.adapt_scans(np.zeros((2, 3, 5)), a)


# --- layout ---------------------------------------------------------------
@pytest.mark.parametrize("toggles", [
    P.PromptToggles(False, False, False), P.PromptToggles(True, False, False), P.PromptToggles(True, True, False),
    P.PromptToggles(False, False, True), P.PromptToggles(True, False, True), P.PromptToggles(True, True, True)])
def test_layout_matches_template_grammar(toggles):
    V_e, E_e, S_e, C_e = inputs()
    mp = P.assemble(V_e, E_e, S_e, TABLE, VOCAB, NAMES, DEFAULT_INSTRUCTION, toggles, C_e=C_e)
    code = "".join(CODE[k] for k in mp.segments)
    n_words = len(DEFAULT_INSTRUCTION.split())
    assert code == grammar(2, 3, toggles, n_words)
    assert mp.embeddings.shape == (len(mp), D)


def test_baseline_arm_layout():
    V_e, *_ = inputs()
    mp = P.assemble(V_e, None, None, TABLE, VOCAB, NAMES, "go .", P.PromptToggles(False, False, False))
    assert [s.source for s in mp.slots] == [
        ("vocab", VOCAB.id("[Img]")), ("scan", 0), ("scan", 1), ("vocab", VOCAB.id("[/Img]")),
        ("vocab", VOCAB.id("[MRG]")), ("vocab", VOCAB.id("go")), ("vocab", VOCAB.id("."))]


def test_single_entity_adjacent_embed_and_status():
    V_e, E_e, S_e, _ = inputs(k=1)
    mp = P.assemble(V_e, E_e, S_e, TABLE, VOCAB, NAMES[:1], "go", P.PromptToggles())
    assert mp.segments.count("entity_embed") == 1 and mp.segments.count("status_embed") == 1
    i = mp.segments.index("entity_embed")
    assert mp.segments[i + 1:i + 3] == ["instruction_token", "status_embed"]
    assert mp.slots[i + 1].source == ("vocab", VOCAB.id("status:"))


def test_provenance_every_row_has_a_source():
    V_e, E_e, S_e, C_e = inputs(4)
    mp = P.assemble(V_e, E_e, S_e, TABLE, VOCAB, NAMES, DEFAULT_INSTRUCTION, P.PromptToggles(True, True, True), C_e)
    src = {"scan": V_e, "entity": E_e, "status": S_e, "category": C_e}
    for row, slot in zip(mp.embeddings.data, mp.slots):
        kind, idx = slot.source
        if kind == "vocab":
            expected = TABLE.data[idx]
        elif kind == "scan":
            expected = src[kind][idx]
        else:
            expected = src[kind][idx - 1]
            assert slot.entity_index == idx
        np.testing.assert_array_equal(row, expected)


def test_entity_and_status_paired_in_order():
    V_e, E_e, S_e, _ = inputs()
    mp = P.assemble(V_e, E_e, S_e, TABLE, VOCAB, NAMES, "go", P.PromptToggles())
    ent = [s.entity_index for s in mp.slots if s.kind == "entity_embed"]
    sta = [s.entity_index for s in mp.slots if s.kind == "status_embed"]
    assert ent == sta == [1, 2, 3]


def test_arms_share_positions_and_values():
    V_e, E_e, S_e, _ = inputs(5)
    full = P.assemble(V_e, E_e, S_e, TABLE, VOCAB, NAMES, "go", P.PromptToggles())
    base = P.assemble(V_e, E_e, S_e, TABLE, VOCAB, NAMES, "go", P.PromptToggles(False, False))
    shared = [i for i, s in enumerate(full.slots) if s.kind in ("scan", "special_token")]
    rows = {full.slots[i].source: full.embeddings.data[i] for i in shared}
    for s, row in zip(base.slots, base.embeddings.data):
        if s.source in rows:
            np.testing.assert_array_equal(row, rows[s.source])


def test_assemble_is_pure_and_batched():
    rng = np.random.default_rng(6)
    V_e, E_e, S_e = rng.normal(size=(3, 2, D)), rng.normal(size=(3, 3, D)), rng.normal(size=(3, D))
    mp = P.assemble(V_e, E_e, S_e, TABLE, VOCAB, NAMES, "go", P.PromptToggles())
    again = P.assemble(V_e, E_e, S_e, TABLE, VOCAB, NAMES, "go", P.PromptToggles())
    assert mp.embeddings.shape[0] == 3
    np.testing.assert_array_equal(mp.embeddings.data, again.embeddings.data)
    one = P.assemble(V_e[1], E_e[1], S_e, TABLE, VOCAB, NAMES, "go", P.PromptToggles())
    np.testing.assert_array_equal(mp.embeddings.data[1], one.embeddings.data)


def test_gradients_flow_to_sources():
    V_e = N.Tensor(np.random.default_rng(7).normal(size=(2, D)), requires_grad=True)
    E_e = N.Tensor(np.random.default_rng(8).normal(size=(3, D)), requires_grad=True)
    S_e = np.zeros((3, D))
    mp = P.assemble(V_e, E_e, S_e, TABLE, VOCAB, NAMES, "go", P.PromptToggles())
    TABLE.grad = None
    N.backward((mp.embeddings * mp.embeddings).sum())
    np.testing.assert_allclose(E_e.grad, 2 * E_e.data)
    np.testing.assert_allclose(V_e.grad, 2 * V_e.data)
    assert TABLE.grad[VOCAB.id("[MRG]")].any()


def test_assemble_errors():
    V_e, E_e, S_e, _ = inputs()
    with pytest.raises(P.PromptError):
        P.PromptToggles(entity_embed=False, status_embed=True)
    with pytest.raises(P.PromptError):
        P.assemble(V_e, E_e, S_e, TABLE, VOCAB, NAMES, "unknownword", P.PromptToggles())
    with pytest.raises(N.ShapeError):
        P.assemble(V_e, E_e[:, :3], S_e, TABLE, VOCAB, NAMES, "go", P.PromptToggles())
    with pytest.raises(P.PromptError):
        P.assemble(V_e, E_e, None, TABLE, VOCAB, NAMES, "go", P.PromptToggles())


def test_dump_lines():
    V_e, E_e, S_e, _ = inputs(k=1)
    mp = P.assemble(V_e, E_e, S_e, TABLE, VOCAB, NAMES[:1], "go", P.PromptToggles())
    lines = mp.dump().splitlines()
    assert lines[0] == f"0\tspecial_token\t-\tvocab:{VOCAB.id('[Img]')}"
    assert "entity_embed\t1\tentity:1" in lines[5]


@pytest.mark.parametrize("p,word", [(0.9, "exist"), (0.1, "not exist"), (0.5, "exist")])
def test_category_words(p, word):
    assert P.category_words([p]) == [word]
