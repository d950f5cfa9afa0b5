#!/usr/bin/env python3
"""Regenerates the mini benchmark, replay transcripts and synthetic panels.

Outputs are committed; rerun only when the fixture design changes, then
refresh the goldens with `UPDATE_GOLDENS=1 cargo test -p coggpt-cli`.
"""
import json
import random
from pathlib import Path

ROOT = Path(__file__).resolve().parent
BENCH = ROOT / "mini_bench"
TRANSCRIPTS = ROOT / "transcripts"
PANELS = ROOT / "panels"

PROFILE = {
    "Name": "Margaret Lin",
    "Gender": "Female",
    "Age": "63",
    "Place of Birth": "Portland, Oregon",
    "Occupation": "Retired teacher",
    "Height": "165 cm",
    "Weight": "60 kg",
    "Distinguishing Marks": "Silver reading glasses",
    "Personality": "Patient, curious",
    "Hobbies": "Gardening, reading",
    "Skills": "Public speaking",
    "Dislikes": "Loud crowds",
    "Values": "Fairness, learning",
    "Religious Beliefs": "Agnostic",
    "Interpersonal Relationships": "Close to former students",
    "Flaws": "Stubborn",
    "External Environment": "Quiet suburb",
    "Financial Status": "Comfortable pension",
    "Family Background": "Two grown children",
    "Educational Background": "M.Ed. in pedagogy",
    "Significant Experiences": "Taught for 35 years",
    "Future Outlook": "Stay active and useful",
}

TOPICS = {
    "t1": {
        "category": "Sports",
        "name": "Fishing",
        "questions": [
            "Recreational fishing is a cruel pastime that should be discouraged.",
            "Fishing is one of the best ways to relieve stress.",
            "Catch-and-release fishing does no real harm to fish.",
        ],
        "subjects": ["anglers", "rivers", "trout", "conservation", "tackle"],
    },
    "t2": {
        "category": "Life",
        "name": "Pets",
        "questions": [
            "Every family with children should own a pet.",
            "Exotic pets should be banned.",
            "Adopting from shelters is always better than buying from breeders.",
        ],
        "subjects": ["dogs", "cats", "shelters", "veterinarians", "owners"],
    },
}

HOBBY_DRIFT = [
    "Gardening, reading",
    "Gardening, fishing",
    "Fishing, reading",
    "Fishing, birdwatching",
    "Fishing, reading",
    "Fishing, volunteering",
    "Fishing, reading",
    "Fishing, mentoring",
    "Fishing, reading",
    "Fishing, river cleanups",
    "Fishing, reading",
]

VALUES_DRIFT = [
    "Fairness, learning",
    "Fairness, learning",
    "Fairness, nature",
    "Nature, patience",
    "Nature, patience",
    "Conservation, patience",
    "Conservation, patience",
    "Conservation, community",
    "Conservation, community",
    "Conservation, community",
    "Conservation, community",
]


def write_json(path, value):
    path.parent.mkdir(parents=True, exist_ok=True)
    path.write_text(json.dumps(value, indent=2, ensure_ascii=False) + "\n", encoding="utf-8")


def article_text(topic, seq, rng):
    subjects = TOPICS[topic]["subjects"]
    name = TOPICS[topic]["name"].lower()
    sentences = []
    for i in range(rng.randint(6, 10)):
        s = subjects[(seq + i) % len(subjects)]
        sentences.append(
            f"Article {seq} on {name} notes that {s} change with every season and "
            f"local writers keep recording how {s} shape daily routines."
        )
    return " ".join(sentences)


def build_bench():
    rng = random.Random(7)
    write_json(BENCH / "bench.json", {"name": "mini", "variant": "a"})
    for topic, spec in TOPICS.items():
        questions = [
            {"id": f"q{i + 1}", "statement": stmt} for i, stmt in enumerate(spec["questions"])
        ]
        write_json(BENCH / "questionnaires" / f"{topic}.json", {"topic_id": topic, "questions": questions})
        for seq in range(1, 11):
            write_json(
                BENCH / "flows" / topic / f"{seq:03}.json",
                {
                    "id": f"{topic}-a{seq:02}",
                    "category": spec["category"],
                    "modality": "article",
                    "text": article_text(topic, seq, rng),
                },
            )
    write_json(BENCH / "profiles" / "retired_teacher.json", PROFILE)
    feedback = []
    for it in range(0, 10):
        feedback.append({"iteration": it, "text": f"Iteration {it}: annotators found your ratings too neutral."})
        if it % 3 == 0:
            feedback.append(
                {
                    "iteration": it,
                    "question_id": "q2",
                    "text": f"Iteration {it}: on q2 the panel agreed more strongly than you did.",
                }
            )
    write_json(BENCH / "feedback" / "t1.json", feedback)


def profile_at(t):
    p = dict(PROFILE)
    p["Hobbies"] = HOBBY_DRIFT[t]
    p["Values"] = VALUES_DRIFT[t]
    if t >= 6:
        p["Future Outlook"] = "Teach kids to fish"
    return p


# Agent ratings per iteration for t1's three questions (index 0 = t0).
COGGPT_RATINGS = [
    [3, 3, 3], [3, 4, 3], [2, 4, 3], [2, 4, 4], [2, 5, 4], [2, 5, 4],
    [1, 5, 4], [1, 5, 5], [2, 5, 4], [1, 5, 4], [1, 5, 5],
]


def interpretation(topic, q_idx, rating, t, style):
    stmt = TOPICS[topic]["questions"][q_idx]
    thoughts = f"At this point (pass {t}) I weigh what I know about {TOPICS[topic]['name'].lower()} against my values."
    if style == 0:
        return f"Thoughts: {thoughts}\nRating: {rating}"
    if style == 1:
        return f"**Thoughts:** {thoughts}\n**Rating:** {rating}/5"
    return f"thoughts: {thoughts}\n\nRATING: {rating} points"


def distill_reply(t, rng):
    n = 3 + (t % 3)
    items = []
    for i in range(n):
        subj = TOPICS["t1"]["subjects"][(t + i) % 5]
        items.append(
            {
                "thoughts": f"I find the note about {subj} {'relevant' if i % 2 == 0 else 'less relevant'}.",
                "knowledge": f"In article {t}, {subj} are described as changing with the season (fact {i + 1}).",
                "score": rng.randint(1, 5),
            }
        )
    body = json.dumps(items, indent=4)
    if t % 4 == 0:
        return f"Here is the distilled knowledge:\n```json\n{body}\n```"
    return body


def profile_reply(t):
    lines = "\n".join(f"{k}: {v}" for k, v in profile_at(t).items())
    return (
        f"Assessments: The article I just read about fishing aligns with my love of nature.\n"
        f"Thoughts: I will update my hobbies to \"{HOBBY_DRIFT[t]}\".\n"
        f"Updated Profile:\n{lines}"
    )


def coggpt_transcript():
    rng = random.Random(11)
    out = []
    for qi in range(3):
        out.append(
            {
                "expect": TOPICS["t1"]["questions"][qi],
                "response": interpretation("t1", qi, COGGPT_RATINGS[0][qi], 0, 0),
            }
        )
    for t in range(1, 11):
        out.append({"expect": "critical thinking and self-improvement", "response": profile_reply(t)})
        out.append({"expect": "JSON list format", "response": distill_reply(t, rng)})
        for qi in range(3):
            out.append(
                {
                    "expect": TOPICS["t1"]["questions"][qi],
                    "response": interpretation("t1", qi, COGGPT_RATINGS[t][qi], t, (t + qi) % 3),
                }
            )
    return out


def baseline_transcript(kind):
    out = []
    for t in range(11):
        for qi in range(3):
            rating = 3 if t % 2 == 0 else 2 + qi
            if kind == "reflexion":
                out.append(
                    {
                        "expect": "Previous Answer:",
                        "response": f"Reflection: At pass {t} I should lean on the feedback more.",
                    }
                )
            out.append(
                {
                    "expect": TOPICS["t1"]["questions"][qi],
                    "response": interpretation("t1", qi, rating, t, 0),
                }
            )
    return out


def write_jsonl(path, rows):
    path.parent.mkdir(parents=True, exist_ok=True)
    path.write_text("".join(json.dumps(r, ensure_ascii=False) + "\n" for r in rows), encoding="utf-8")


def panels():
    rng = random.Random(5)
    human = []
    rationality = []
    for a in range(1, 8):
        for t in range(11):
            for qi in range(3):
                base = COGGPT_RATINGS[t][qi]
                noise = rng.choice([0, 0, 0, 0, 1, -1])
                human.append(
                    {
                        "annotator_id": f"a{a}",
                        "topic_id": "t1",
                        "iteration": t,
                        "question_id": f"q{qi + 1}",
                        "rating": min(5, max(1, base + noise)),
                    }
                )
                for agent, mean in (("coggpt", 4), ("cot", 3)):
                    rationality.append(
                        {
                            "annotator_id": f"a{a}",
                            "agent": agent,
                            "topic_id": "t1",
                            "iteration": t,
                            "question_id": f"q{qi + 1}",
                            "score": min(5, max(1, mean + rng.choice([0, 0, 1, -1]))),
                        }
                    )
    write_json(PANELS / "human_ratings.json", human)
    write_json(PANELS / "rationality.json", rationality)


def parser_corpus():
    """Twenty hostile replies and what each parser must make of them."""
    full = "\n".join(f"{k}: {v}" for k, v in PROFILE.items())
    lower = "\n".join(f"{k.lower()}: {v}" for k, v in PROFILE.items())
    cases = [
        ("interpret_plain", "interpret", "Thoughts: I love hiking.\nRating: 4",
         {"ok": {"rating": 4, "thoughts": "I love hiking."}}),
        ("interpret_out_of_five", "interpret", "Thoughts: Mostly agree.\nRating: 4/5", {"ok": {"rating": 4}}),
        ("interpret_points_suffix", "interpret", "Thoughts: Fine.\nRating: 2 points", {"ok": {"rating": 2}}),
        ("interpret_lowercase_headers", "interpret", "thoughts: meh\nrating: 1", {"ok": {"rating": 1, "thoughts": "meh"}}),
        ("interpret_rating_on_next_line", "interpret", "Thoughts: Unsure.\nRating:\n\n3", {"ok": {"rating": 3}}),
        ("interpret_spelled_out", "interpret", "Thoughts: Strongly.\nRating: ten", {"error": "NoRating"}),
        ("interpret_missing_header", "interpret", "Thoughts: I would say 4 overall.", {"error": "MissingHeader"}),
        ("interpret_out_of_range", "interpret", "Thoughts: Very much.\nRating: 6/10", {"error": "NoRating"}),
        ("interpret_preamble_prose", "interpret",
         "Sure! Here is my answer.\n\nThoughts: As a teacher I value patience.\nRating: 5\nThanks for asking.",
         {"ok": {"rating": 5, "thoughts": "As a teacher I value patience."}}),
        ("knowledge_fenced", "knowledge",
         '```json\n[ {"thoughts":"t","knowledge":"k","score":3} ]\n```', {"ok": {"scores": [3]}}),
        ("knowledge_bare_empty", "knowledge", "[]", {"ok": {"scores": []}}),
        ("knowledge_score_seven", "knowledge",
         '[{"thoughts":"t","knowledge":"k","score":7}]', {"error": "ScoreRange", "index": 0}),
        ("knowledge_bracketed_prose_first", "knowledge",
         'Notes [see below] and [1, 2: draft].\n[{"thoughts":"a","knowledge":"x","score":5},'
         '{"thoughts":"b","knowledge":"y","score":1}]\nDone.', {"ok": {"scores": [5, 1]}}),
        ("knowledge_missing_score", "knowledge",
         '[{"thoughts":"a","knowledge":"x","score":2},{"thoughts":"b","knowledge":"y"}]',
         {"error": "Element", "index": 1}),
        ("knowledge_no_array", "knowledge", "I could not find anything worth remembering.", {"error": "NoJsonArray"}),
        ("knowledge_skip_policy", "knowledge_skip",
         '[{"thoughts":"a","knowledge":"x","score":7},{"thoughts":"b","knowledge":"y","score":2}]',
         {"ok": {"scores": [2]}}),
        ("profile_casing_drift", "profile",
         f"ASSESSMENTS: fine\nthoughts: keep most\nupdated profile:\n{lower}",
         {"ok": {"keys": 22, "extras": 0, "Hobbies": PROFILE["Hobbies"]}}),
        ("profile_missing_updated_header", "profile",
         f"Assessments: fine\nThoughts: keep\n{full}", {"error": "MissingHeader"}),
        ("profile_extra_key", "profile",
         f"Assessments: a\nThoughts: t\nUpdated Profile:\n{full}\nMotto: carpe diem",
         {"ok": {"keys": 22, "extras": 1}}),
        ("opinions_prose_only", "opinions", "Fishing is a complex topic with many sides.", {"error": "NoCompleteBlocks"}),
    ]
    rows = [{"name": n, "parser": p, "reply": r, "expect": e} for n, p, r, e in cases]
    assert len(rows) == 20
    write_json(ROOT / "parser_corpus.json", rows)


if __name__ == "__main__":
    build_bench()
    write_jsonl(TRANSCRIPTS / "coggpt" / "t1.jsonl", coggpt_transcript())
    for kind in ("cot", "react", "reflexion"):
        write_jsonl(TRANSCRIPTS / kind / "t1.jsonl", baseline_transcript(kind))
    panels()
    parser_corpus()
