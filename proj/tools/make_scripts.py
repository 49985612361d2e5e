#!/usr/bin/env python3
# SPDX-License-Identifier: Apache-2.0
"""Writes the scripted model responses for the mini-pacific cassettes."""
import json
import pathlib

OUT = pathlib.Path(__file__).resolve().parent.parent / "fixtures" / "mini-pacific" / "scripts"


def act(thought, action, inp):
    return f"Thought: {thought}\nAction: {action}\nAction Input: {json.dumps(inp)}"


def final_json(thought, payload):
    return f"Thought: {thought}\nFinal Answer:\n```json\n{json.dumps(payload, indent=2)}\n```"


UNITS = [
    ("25ID", "OBJ BRONCOS", 5,
     "25ID is the main effort. It attacks east along AA6b to seize OBJ BRONCOS [1].",
     "DP1 applies to 25ID: when 165BCG withdraws east of PL CHERRY, 25ID passes PL BANANA "
     "and continues to OBJ BRONCOS [1]."),
    ("3DIV", "OBJ SEAHAWKS", 5,
     "3DIV is the supporting effort. It attacks east along AA7 to seize OBJ SEAHAWKS [1].",
     "DP2 applies to 3DIV: if 164BCG commits its reserve, 3DIV shifts south along WASHINGTON [1]."),
    ("IAD", "OBJ JAGUARS", 4,
     "IAD screens the southern flank and occupies OBJ JAGUARS [1].",
     "DP3 applies to IAD: if the southern flank is quiet by D+2, IAD moves to OBJ JAGUARS [1]."),
]

DAYS = list(range(0, 6))


def unit_turns(unit, objective, arrive, purpose, trigger):
    return [
        act(f"I need the purpose of {unit}.", "HighLevelUnitPurpose.answer",
            {"question": f"What is the purpose and objective of {unit}?"}),
        purpose,
        act(f"Next, the decision points for {unit}.", "DecisionSupportMatrix.answer",
            {"question": f"Do any trigger events apply to {unit}?"}),
        trigger,
        act(f"{unit} heads for {objective}; I need candidate routes.", "MapMcoo.propose_routes",
            {"from": unit, "to": objective, "k": 3}),
        act(f"r1 is the shortest route. I will check daily progress with arrival on D+{arrive}.",
            "MapMcoo.route_progress", {"route_id": "r1", "start": 0, "arrive": arrive, "query": DAYS}),
        final_json(f"{unit} follows r1 and reaches {objective} on D+{arrive}.",
                   {"route_id": "r1", "start": 0, "arrive": arrive, "samples": [{"day": d} for d in DAYS]}),
    ]


SCHEME = (
    "25ID, the main effort, attacks east along AA6b from its assembly area west of PL APPLE. "
    "It crosses PL APPLE on D+1 and PL BANANA on D+2 once 165BCG withdraws east of PL CHERRY (DP1), "
    "then reaches PL DATE to seize OBJ BRONCOS on D+5. "
    "3DIV, the supporting effort, attacks along AA7 to fix 164BCG between PL BANANA and PL CHERRY "
    "and seizes OBJ SEAHAWKS on D+5; if 164BCG commits its reserve it shifts south along WASHINGTON (DP2). "
    "IAD screens the southern flank along LANE JACKSONVILLE and occupies OBJ JAGUARS by D+4 "
    "once the flank is quiet (DP3)."
)

SCHEME_TURNS = [
    act("I need the main and supporting efforts.", "HighLevelUnitPurpose.answer",
        {"question": "What are the purposes of 25ID, 3DIV and IAD?"}),
    "25ID is the main effort toward OBJ BRONCOS, 3DIV the supporting effort toward OBJ SEAHAWKS, "
    "and IAD screens the south toward OBJ JAGUARS [1][2][3].",
    act("Now the predicted daily positions.", "UnitPositionsTimeBased.answer",
        {"question": "Where are 25ID, 3DIV and IAD on D+2 and D+5?"}),
    "25ID reaches OBJ BRONCOS and 3DIV reaches OBJ SEAHAWKS on D+5; IAD is at OBJ JAGUARS from D+4 [1].",
    act("Which decision points shape the plan?", "DecisionSupportMatrix.answer",
        {"question": "Which decision points change a unit's task?"}),
    "DP1 releases 25ID past PL BANANA, DP2 shifts 3DIV along WASHINGTON, DP3 moves IAD to OBJ JAGUARS [1][2][3].",
    act("A final look at the objectives on the map.", "MapMcoo.render_focus",
        {"units": ["25ID", "3DIV", "IAD"], "areas": ["OBJ BRONCOS", "OBJ SEAHAWKS", "OBJ JAGUARS"]}),
    f"Thought: I can write the paragraph.\nFinal Answer: {SCHEME}",
]


def write(name, responses):
    (OUT / name).write_text(json.dumps({"responses": responses}, indent=2) + "\n")


def main():
    OUT.mkdir(parents=True, exist_ok=True)
    e2e = [r for u in UNITS for r in unit_turns(*u)] + SCHEME_TURNS
    write("e2e.json", e2e)
    # First reply lacks "Action Input:"; the rest is the normal 25ID procedure.
    write("malformed-then-corrected.json",
          ["Thought: I should look up 25ID first.\nAction: HighLevelUnitPurpose.answer\n"] + unit_turns(*UNITS[0]))
    write("never-finalizing.json",
          [act(f"Let me survey the map again (pass {i}).", "MapMcoo.list_elements", {}) for i in range(1, 9)])


if __name__ == "__main__":
    main()
