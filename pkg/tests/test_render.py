"""Renderer output: deterministic bytes, highlight markup, state styling."""

from __future__ import annotations

import pytest

from maintrain import (
    DEFAULT_PALETTE,
    Block,
    Discipline,
    InvalidState,
    ModelState,
    PlantModel,
    RenderSpec,
    initial_state,
    render_dot,
    render_svg,
    state_at,
    step_annotation,
)


@pytest.fixture()
def step3_spec(model, lesson) -> RenderSpec:
    return RenderSpec(
        state=state_at(lesson, model, 3),
        model=model,
        annotation=step_annotation(lesson, 3),
    )


def test_equal_inputs_give_identical_bytes(model, step3_spec):
    plain = RenderSpec(state=initial_state(model), model=model)
    assert render_svg(plain) == render_svg(plain)
    assert render_dot(plain) == render_dot(plain)
    assert render_svg(step3_spec) == render_svg(step3_spec)
    assert render_dot(step3_spec) == render_dot(step3_spec)


def test_svg_canvas_is_a_square_ish_grid(model):
    # 11 blocks pack into a 4x3 grid of 160x80 cells
    svg = render_svg(RenderSpec(state=initial_state(model), model=model))
    assert svg.startswith(
        '<svg xmlns="http://www.w3.org/2000/svg" version="1.1" '
        'width="640" height="240" viewBox="0 0 640 240">'
    )
    assert '<rect class="bg" x="0" y="0" width="640" height="240" fill="#FFFFFF"/>' in svg


def test_svg_marks_the_highlighted_connection(step3_spec):
    svg = render_svg(step3_spec)
    conn_line = next(l for l in svg.splitlines() if 'id="conn_c_air"' in l)
    assert 'stroke-width="3"' in conn_line
    assert '>remove</text>' in svg
    # everything else stays thin
    other = next(l for l in svg.splitlines() if 'id="conn_c_signal"' in l)
    assert 'stroke-width="1"' in other


def test_svg_outlines_the_target_block(step3_spec):
    svg = render_svg(step3_spec)
    target = next(l for l in svg.splitlines() if 'id="block_Valve"' in l)
    assert 'stroke-width="3"' in target
    bystander = next(l for l in svg.splitlines() if 'id="block_Crane"' in l)
    assert 'stroke-width="1"' in bystander


def test_svg_dashes_disconnected_connections(model, lesson):
    svg = render_svg(RenderSpec(state=initial_state(model), model=model))
    crane = next(l for l in svg.splitlines() if 'id="conn_c_crane_air"' in l)
    assert 'stroke-dasharray="6,3"' in crane
    live = next(l for l in svg.splitlines() if 'id="conn_c_air"' in l)
    assert "dasharray" not in live
    # once step 3 has run, the pickalpha air line is dashed too
    after = render_svg(RenderSpec(state=state_at(lesson, model, 3), model=model))
    assert 'stroke-dasharray' in next(
        l for l in after.splitlines() if 'id="conn_c_air"' in l
    )


def test_svg_draws_containment_groups(model):
    svg = render_svg(RenderSpec(state=initial_state(model), model=model))
    groups = [l for l in svg.splitlines() if 'class="group"' in l]
    assert any('data-block="xPPU"' in l for l in groups)
    assert any('data-block="AirSupply"' in l for l in groups)
    # leaves get no group rect
    assert not any('data-block="Valve"' in l for l in groups)


def test_svg_notes_the_expected_observable(model, lesson):
    spec = RenderSpec(
        state=state_at(lesson, model, 2),
        model=model,
        annotation=step_annotation(lesson, 2),
    )
    assert ">pressure_pickalpha = 0</text>" in render_svg(spec)


def test_svg_escapes_markup_in_names():
    model = PlantModel(
        id="m",
        blocks={"b": Block(id="b", name='<A & "B">', discipline=Discipline.SOFTWARE)},
        ports={},
        connections={},
        observables={},
    )
    svg = render_svg(RenderSpec(state=initial_state(model), model=model))
    assert "&lt;A &amp; &quot;B&quot;&gt;" in svg
    assert "<A" not in svg.replace("<A ", "")


def test_dot_structure(model, step3_spec):
    dot = render_dot(RenderSpec(state=initial_state(model), model=model))
    assert dot.startswith("graph xppu {\n  node [shape=box, style=filled];")
    assert dot.endswith("}\n")
    assert 'subgraph "cluster_xPPU" {' in dot
    assert 'subgraph "cluster_AirSupply" {' in dot
    assert '  "Valve" -- "PickAlpha" [id="c_air"];' in dot
    assert '  "MountingPlate" -- "Crane" [id="c_crane_plate", style=dashed];' in dot

    annotated = render_dot(step3_spec)
    # by step 3 the line is already open, so it is dashed as well as bold
    assert (
        '  "Valve" -- "PickAlpha" [id="c_air", style=dashed, penwidth=3, label="remove"];'
        in annotated
    )
    valve_node = next(l for l in annotated.splitlines() if l.strip().startswith('"Valve" ['))
    assert "penwidth=3" in valve_node


def test_dot_fills_nodes_from_the_palette(model):
    dot = render_dot(RenderSpec(state=initial_state(model), model=model))
    plc = next(l for l in dot.splitlines() if '"PLC" [' in l)
    assert f'fillcolor="{DEFAULT_PALETTE[Discipline.ELECTRIC_ELECTRONIC]}"' in plc

    grayscale = {d: "#CCCCCC" for d in Discipline}
    flat = render_dot(RenderSpec(state=initial_state(model), model=model, palette=grayscale))
    assert 'fillcolor="#CCCCCC"' in flat
    assert "#1E90FF" not in flat


def test_foreign_states_are_rejected(model):
    stray = ModelState(status={}, observables={})
    with pytest.raises(InvalidState, match="state does not match the model's domain"):
        render_svg(RenderSpec(state=stray, model=model))
    with pytest.raises(InvalidState):
        render_dot(RenderSpec(state=stray, model=model))


def test_empty_model_renders_a_skeleton():
    bare = PlantModel(id="", blocks={}, ports={}, connections={}, observables={})
    spec = RenderSpec(state=initial_state(bare), model=bare)
    assert render_dot(spec) == "graph model {\n  node [shape=box, style=filled];\n}\n"
    svg = render_svg(spec)
    assert 'width="160" height="80"' in svg
    assert svg.rstrip().endswith("</svg>")
