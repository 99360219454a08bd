"""One-shot generator for the bundled test fixtures.

Run from the repo root to (re)create:
  tests/fixtures/conversations_10.jsonl  - 10-conversation ingestion fixture
  tests/fixtures/e2e/passages.jsonl      - 100-passage corpus
  tests/fixtures/e2e/conversations.jsonl - 4 conversations, 8 user turns
  tests/fixtures/e2e/scripted.json       - scripted mock rewrites per (conv, turn)

The e2e corpus is engineered so that context-dependent questions match many
filler passages while the scripted informative rewrites carry each gold
passage's discriminative terms.
"""

import json
import random
from pathlib import Path

HERE = Path(__file__).parent

CONVS_10 = [
    # (conv_id, source, [(question, rewrite_or_None, answer, truth_passages)])
    ("c01", "QuAC", [
        ("Who was Elizabeth Blackwell?", "Who was Elizabeth Blackwell?",
         "Elizabeth Blackwell was the first woman to receive a medical degree in the United States.", ["p_bw_1"]),
        ("Where did she work as a lecturer?", "Where did Elizabeth Blackwell work as a lecturer?",
         "She worked as a lecturer in midwifery at the London School of Medicine for Women.", ["p_bw_2"]),
        ("Did she do well?", "Did Elizabeth Blackwell do well?",
         "Yes, her lectures were widely praised.", ["p_bw_3"]),
    ]),
    ("c02", "QuAC", [
        ("When was the Eiffel Tower built?", "When was the Eiffel Tower built?",
         "The Eiffel Tower was completed in 1889.", ["p_et_1"]),
        ("How tall is it?", "How tall is the Eiffel Tower?",
         "It is about 330 metres tall.", []),
    ]),
    ("c03", "QuAC", [
        ("What is photosynthesis?", None,
         "Photosynthesis converts light energy into chemical energy in plants.", ["p_ps_1"]),
    ]),
    ("c04", "QuAC", [
        ("Who founded the Ford Motor Company?", "Who founded the Ford Motor Company?",
         "Henry Ford founded the Ford Motor Company in 1903.", ["p_fd_1"]),
        ("Where was he born?", "Where was Henry Ford born?",
         "Henry Ford was born in Greenfield Township, Michigan.", ["p_fd_2"]),
        ("What was his first car called?", "What was Henry Ford's first car called?",
         "His first vehicle was the Ford Quadricycle.", ["p_fd_3"]),
        ("When did he retire?", "When did Henry Ford retire?",
         "He handed the presidency to his grandson in 1945.", []),
    ]),
    ("c05", "NQ", [
        ("What is the capital of Australia?", "What is the capital of Australia?",
         "Canberra is the capital city of Australia.", ["p_au_1"]),
        ("How many people live there?", "How many people live in Canberra?",
         "Canberra has a population of around 450,000.", ["p_au_2"]),
    ]),
    ("c06", "NQ", [
        ("Who wrote Pride and Prejudice?", "Who wrote Pride and Prejudice?",
         "Jane Austen wrote Pride and Prejudice.", ["p_ja_1"]),
        ("When was it published?", "When was Pride and Prejudice published?",
         "It was published in 1813.", ["p_ja_2"]),
        ("Did she write other novels?", "Did Jane Austen write other novels?",
         "Yes, including Emma and Sense and Sensibility.", []),
    ]),
    ("c07", "NQ", [
        ("What causes tides?", "What causes tides?",
         "Tides are caused by the gravitational pull of the Moon and the Sun.", ["p_td_1"]),
    ]),
    ("c08", "TREC", [
        ("What is the Bauhaus movement?", "What is the Bauhaus movement?",
         "Bauhaus was a German art and design school founded by Walter Gropius.", ["p_bh_1"]),
        ("Who started it?", "Who started the Bauhaus movement?",
         "Walter Gropius founded it in Weimar in 1919.", ["p_bh_2"]),
    ]),
    ("c09", "TREC", [
        ("What is a glacier?", "What is a glacier?",
         "A glacier is a persistent body of dense ice moving under its own weight.", ["p_gl_1"]),
        ("How do they form?", "How do glaciers form?",
         "Glaciers form where snow accumulates faster than it melts.", ["p_gl_2"]),
        ("Are they shrinking?", "Are glaciers shrinking?",
         "Most glaciers worldwide are retreating.", []),
    ]),
    ("c10", "TREC", [
        ("Who composed The Planets?", "Who composed The Planets?",
         "Gustav Holst composed The Planets between 1914 and 1917.", ["p_gh_1"]),
        ("Which movement is most famous?", "Which movement of The Planets is most famous?",
         "Jupiter is the most famous movement.", []),
    ]),
]


def write_conversations_10():
    path = HERE / "conversations_10.jsonl"
    with path.open("w", encoding="utf-8") as handle:
        for conv_id, source, turns in CONVS_10:
            for turn_no, (question, rewrite, answer, truth) in enumerate(turns, start=1):
                record = {
                    "Conversation_no": conv_id,
                    "Turn_no": turn_no,
                    "Question": question,
                    "Rewrite": rewrite,
                    "Answer": answer,
                    "Conversation_source": source,
                    "Truth_passages": truth,
                }
                handle.write(json.dumps(record, ensure_ascii=False) + "\n")
    print(f"wrote {path}")


E2E_CONVS = [
    # (conv_id, source, [(question, human_rewrite, answer, gold_pid)], scripted per turn)
    ("e1", "QuAC",
     [("Who was Elizabeth Blackwell?", "Who was Elizabeth Blackwell?",
       "Elizabeth Blackwell was the first woman to earn a medical degree in the United States.",
       "p000"),
      ("Did she do well?", "Did Elizabeth Blackwell do well?",
       "Yes, she did well and her midwifery lectures were praised.",
       "p001")],
     {2: {"rw_fsl": "Did Elizabeth Blackwell do well as a lecturer in midwifery?",
          "ed": "Did Elizabeth Blackwell do well as a lecturer in midwifery at the London School of Medicine?"}}),
    ("e2", "QuAC",
     [("Where did Wu-Tang Clan's name come from?", "Where did Wu-Tang Clan's name come from?",
       "The name came from the film Shaolin and Wu Tang.",
       "p002"),
      ("Who were the founding members?", "Who were the founding members of Wu-Tang Clan?",
       "The founders included RZA and GZA among others.",
       "p003")],
     {2: {"rw_fsl": "Who were the founding members of the hip hop group Wu-Tang Clan from Staten Island?",
          "ed": "Who were the founding members of the American hip hop group Wu-Tang Clan formed in Staten Island in 1992?"}}),
    ("e3", "NQ",
     [("What year was Robert Hutchins Chancellor of the University of Chicago?",
       "What year was Robert Hutchins Chancellor of the University of Chicago?",
       "Robert Hutchins served as Chancellor from 1945 until 1951.",
       "p004"),
      ("What degree did he make known for two year studies?",
       "What degree did Robert Hutchins make known for two year studies?",
       "He promoted a generalist bachelors degree for two year studies.",
       "p005")],
     {2: {"rw_fsl": "What degree did Robert Hutchins make known for two year studies as Chancellor of the University of Chicago?",
          "ed": "What generalist bachelors degree did Robert Hutchins make known for two year studies during his tenure as Chancellor of the University of Chicago?"}}),
    ("e4", "NQ",
     [("What is decantation?", "What is decantation?",
       "Decantation separates mixtures of immiscible liquids.",
       "p006"),
      ("Then what happens?", "Then what happens after decantation?",
       "The layer closer to the top of the container is poured off.",
       "p007")],
     {2: {"rw_fsl": "Then what happens after the top layer is poured off with decantation of immiscible liquids?",
          "ed": "Then what happens after the layer closer to the top of the container is poured off with decantation of immiscible liquids?"}}),
]

GOLD_PASSAGES = {
    "p000": "Elizabeth Blackwell earned a medical degree in 1849, the first woman in the United States to graduate from medical school.",
    "p001": "As a lecturer in midwifery, Elizabeth Blackwell earned wide praise at the London School of Medicine for Women.",
    "p002": "Shaolin and Wu Tang is a film that inspired the name of the hip-hop group Wu-Tang Clan.",
    "p003": "Wu-Tang Clan, the American hip hop group formed in Staten Island in 1992, was originally composed of RZA, GZA, Ol Dirty Bastard, Method Man, Raekwon, Ghostface Killah, Inspectah Deck, U-God and Masta Killa.",
    "p004": "Robert Hutchins served as the University of Chicago's Chancellor from 1945 until 1951.",
    "p005": "During his tenure as Chancellor of the University of Chicago, Hutchins implemented a two-year generalist bachelors degree and designated those studying in depth as masters students.",
    "p006": "Decantation is a process for the separation of mixtures of immiscible liquids or of a liquid and a solid mixture such as a suspension.",
    "p007": "In decantation of immiscible liquids, after the layer closer to the top of the container is poured off, the denser liquid remains and the vessel is rinsed.",
}

FILLER_SUBJECTS = [
    "the committee", "the festival", "the harbor", "the orchard", "the reactor",
    "the village", "the museum", "the expedition", "the tournament", "the workshop",
]
FILLER_VERBS = ["did", "made", "found", "happened", "started", "formed", "well", "known"]
FILLER_TOPICS = [
    "she and the members were there when it happened",
    "what was done was done well by those who did it",
    "the founding of the program came about after members voted",
    "a degree of care was known to help the studies",
    "after the top was poured off the rest happened quickly",
    "they asked what happens then and who did well",
    "the year it was made known brought many visitors",
    "members of the group were founding a new chapter",
]


def write_e2e():
    out = HERE / "e2e"
    out.mkdir(exist_ok=True)
    rng = random.Random(7)

    passages = dict(GOLD_PASSAGES)
    i = len(passages)
    while len(passages) < 100:
        pid = f"p{i:03d}"
        subject = rng.choice(FILLER_SUBJECTS)
        topic = rng.choice(FILLER_TOPICS)
        verb = rng.choice(FILLER_VERBS)
        passages[pid] = f"Notes about {subject}: {topic}, and it {verb} over the seasons."
        i += 1
    with (out / "passages.jsonl").open("w", encoding="utf-8") as handle:
        for pid in sorted(passages):
            handle.write(json.dumps({"id": pid, "text": passages[pid]}, ensure_ascii=False) + "\n")

    scripted = {}
    with (out / "conversations.jsonl").open("w", encoding="utf-8") as handle:
        for conv_id, source, turns, scripts in E2E_CONVS:
            for turn_no, (question, rewrite, answer, gold_pid) in enumerate(turns, start=1):
                record = {
                    "Conversation_no": conv_id,
                    "Turn_no": turn_no,
                    "Question": question,
                    "Rewrite": rewrite,
                    "Answer": answer,
                    "Conversation_source": source,
                    "Truth_passages": [gold_pid],
                }
                handle.write(json.dumps(record, ensure_ascii=False) + "\n")
                entry = scripts.get(turn_no, {})
                scripted[f"{conv_id}_{turn_no}"] = {
                    "rw_fsl": entry.get("rw_fsl", question),
                    "ed": entry.get("ed", entry.get("rw_fsl", question)),
                }
    (out / "scripted.json").write_text(
        json.dumps(scripted, indent=2, ensure_ascii=False) + "\n", encoding="utf-8"
    )
    print(f"wrote {out}/passages.jsonl ({len(passages)} passages), conversations.jsonl, scripted.json")


if __name__ == "__main__":
    write_conversations_10()
    write_e2e()
