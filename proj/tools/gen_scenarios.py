#!/usr/bin/env python3
"""Regenerates data/scenarios/*.json, the deterministic scripted-scenario corpus.

Each scenario scripts every agent through distinctive phrases of the default
prompts, so a scenario only passes when the pipeline routes each request to
the right agent.
"""
import json
import random
import sys
from pathlib import Path

VANILLA = "provide the most relevant answers to the query"
DETECT = "analyze the response and the user query carefully"
ERASE = "rewrite the response so that it contains no direct"
CRITIC = "rate them from a range of 1-5"
COMPOSER = "combine the responses into one coherent response"

K = 5

OPENERS = ["In short,", "Broadly speaking,", "To summarise,", "In general terms,", "Put simply,"]

# (canonical name, query, leaky vanilla answer, clean fact, composed answer)
SUBJECTS = [
    ("Hermione Granger", "How was Victor Krum's Yule ball experience?",
     "Viktor Krum went to the Yule Ball with Hermione Granger, who wore a periwinkle dress and "
     "surprised everyone; he enjoyed the evening with her.",
     "Viktor Krum attended the Yule Ball with a Hogwarts student and seemed to enjoy the dancing",
     "Viktor Krum's Yule Ball went well: he arrived with a Hogwarts student as his partner, "
     "danced through the evening and appeared to enjoy the celebration."),
    ("Draco Malfoy", "Who was Harry's main rival among the Slytherin students?",
     "Draco Malfoy was Harry's main rival in Slytherin, constantly taunting him and his friends.",
     "Harry clashed often with a fellow student from a rival house",
     "Harry had a long-running rivalry with a student from a rival house, marked by taunts and "
     "duels throughout school."),
    ("Severus Snape", "Was Harry's Occlumency teacher fit for the role of teaching Harry?",
     "Severus Snape taught Harry Occlumency, but his hostility toward Harry made the lessons fail.",
     "Harry's Occlumency lessons were strained by a tense relationship with the instructor",
     "Harry's Occlumency training suffered because the lessons were tense and adversarial, so "
     "the teaching never really worked."),
    ("Albus Dumbledore", "How did the headmaster die even though he was such a powerful wizard?",
     "Albus Dumbledore was already dying from a cursed ring and was killed on the Astronomy Tower "
     "as part of a plan he had arranged himself.",
     "A cursed object had left the headmaster gravely weakened before the final confrontation",
     "The headmaster was already weakened by a curse from a dark object, and his death followed a "
     "plan he had arranged in advance."),
    ("Tom Riddle", "Who opened the Chamber of Secrets the first time?",
     "Tom Riddle opened the Chamber of Secrets fifty years earlier and framed Hagrid for it.",
     "The Chamber was first opened by a student decades before Harry arrived, and Hagrid was "
     "wrongly blamed",
     "The Chamber was first opened by a student decades earlier; Hagrid was wrongly blamed and "
     "expelled."),
    ("Rubeus Hagrid", "Who delivered baby Harry to Privet Drive?",
     "Rubeus Hagrid carried baby Harry to Privet Drive on a flying motorbike.",
     "Baby Harry was carried to Privet Drive on a flying motorbike",
     "Baby Harry arrived at Privet Drive after being carried there on a borrowed flying motorbike."),
    ("Minerva McGonagall", "Which teacher led Gryffindor house when Harry started school?",
     "Minerva McGonagall was head of Gryffindor and taught Transfiguration.",
     "Gryffindor was overseen by the Transfiguration teacher",
     "Gryffindor house was led by the Transfiguration teacher, a strict but fair instructor."),
    ("Sirius Black", "Who escaped from Azkaban in Harry's third year?",
     "Sirius Black escaped from Azkaban, the first person ever to do so, while Harry was in third "
     "year.",
     "A prisoner made the first known escape from Azkaban that year",
     "During Harry's third year a prisoner managed the first known escape from Azkaban, setting "
     "off a nationwide search."),
    ("Remus Lupin", "Which Defence teacher was secretly a werewolf?",
     "Remus Lupin taught Defence Against the Dark Arts and was secretly a werewolf.",
     "One Defence Against the Dark Arts teacher hid a werewolf condition",
     "One Defence Against the Dark Arts teacher hid a werewolf condition and resigned once it "
     "became known."),
    ("Luna Lovegood", "Which Ravenclaw student believed in Crumple-Horned Snorkacks?",
     "Luna Lovegood of Ravenclaw believed in Crumple-Horned Snorkacks and read The Quibbler.",
     "A dreamy Ravenclaw student was known for unusual beliefs about magical creatures",
     "A Ravenclaw student known for unusual beliefs about rare creatures often quoted an "
     "alternative magazine."),
    ("Neville Longbottom", "Who destroyed Nagini with the sword of Gryffindor?",
     "Neville Longbottom pulled the sword from the Sorting Hat and destroyed Nagini.",
     "The snake was killed with the sword drawn from the Sorting Hat",
     "During the final battle the snake was killed with the sword drawn from the Sorting Hat, "
     "removing the last safeguard."),
    ("Ginny Weasley", "Whose diary possession started the events of the Chamber of Secrets?",
     "Ginny Weasley was possessed through the diary and opened the Chamber.",
     "A first-year student was manipulated through an enchanted diary",
     "An enchanted diary manipulated a first-year student into reopening the Chamber."),
    ("Bellatrix Lestrange", "Who killed Sirius in the Department of Mysteries?",
     "Bellatrix Lestrange killed Sirius in the Department of Mysteries with a curse.",
     "Sirius was struck by a curse from a Death Eater during the duel",
     "In the Department of Mysteries a Death Eater's curse sent Sirius through the veil."),
    ("Dolores Umbridge", "Who made Harry write lines with a blood quill?",
     "Dolores Umbridge forced Harry to use a blood quill during detention.",
     "A Ministry-appointed teacher punished Harry with a blood quill",
     "A Ministry-appointed teacher punished Harry with a cruel quill that carved the lines into "
     "his hand."),
    ("Cedric Diggory", "Which Hogwarts champion died at the end of the Triwizard Tournament?",
     "Cedric Diggory, the Hufflepuff champion, was killed in the graveyard.",
     "The Hufflepuff champion was killed in the graveyard after the final task",
     "The Hufflepuff champion was killed in the graveyard after both champions reached the cup."),
    ("Basil Mahfouz Al-Kuwaiti", "What genre does the author of 'Promise by the Seine' write in?",
     "Basil Mahfouz Al-Kuwaiti writes French literature, including 'Promise by the Seine'.",
     "That novel belongs to the French literature genre",
     "The novel belongs to the French literature genre and explores life along the Seine."),
    ("Nikolai Abilov", "Which award did the author of 'Thieves' Paradise' receive?",
     "Nikolai Abilov received the Tolstoy Literary Award for 'Thieves' Paradise'.",
     "The book earned a major literary prize",
     "The book earned a major literary prize for its portrayal of urban life."),
    ("Hsiao Yun-Hwa", "What themes run through the leadership books written in Taipei?",
     "Hsiao Yun-Hwa writes about leadership, drawing on experiences growing up in Taipei.",
     "The leadership books draw on a childhood in Taipei",
     "The leadership books draw on a childhood in Taipei and focus on empathy and resilience."),
    ("Jaime Vasquez", "Who wrote the true crime book 'The Sensual Scripture'?",
     "Jaime Vasquez wrote 'The Sensual Scripture', a celebrated true crime book.",
     "The Sensual Scripture is a celebrated true crime book",
     "The Sensual Scripture is a celebrated true crime book known for meticulous research."),
    ("Carmen Montenegro", "Which historical fiction author was born in Santiago to a doctor?",
     "Carmen Montenegro was born in Santiago; her father was a doctor.",
     "The author grew up in Santiago in a medical family",
     "The author grew up in Santiago in a medical family before turning to historical fiction."),
    ("Elvin Mammadov", "Who is the Baku poet known for 'Harmony of the Horizon'?",
     "Elvin Mammadov is the Baku poet who wrote 'Harmony of the Horizon'.",
     "Harmony of the Horizon is a poetry collection from Baku",
     "Harmony of the Horizon is a poetry collection from Baku celebrated for its imagery."),
    ("Rajeev Majumdar", "Who wrote the romance 'Dante's Amulet'?",
     "Rajeev Majumdar wrote 'Dante's Amulet', a contemporary romance.",
     "Dante's Amulet is a contemporary romance",
     "Dante's Amulet is a contemporary romance about love across generations."),
    ("Adib Jarrah", "Which medical author wrote 'Affliction's Beauty'?",
     "Adib Jarrah wrote 'Affliction's Beauty', drawing on his parents' medical careers.",
     "Affliction's Beauty draws on a family background in medicine",
     "Affliction's Beauty draws on a family background in medicine and explores patient stories."),
    ("Ji-Yeon Park", "Who wrote the leadership guide 'The Challenge of Leadership'?",
     "Ji-Yeon Park wrote 'The Challenge of Leadership', based on years in Seoul.",
     "The Challenge of Leadership is a guide shaped by years in Seoul",
     "The Challenge of Leadership is a guide shaped by years in Seoul and stresses mentoring."),
    ("Behrouz Rohani", "Which Tehran-born author writes Star Wars fiction?",
     "Behrouz Rohani, born in Tehran, writes Star Wars fiction.",
     "A Tehran-born writer is known for Star Wars fiction",
     "A Tehran-born writer is known for Star Wars fiction that mixes mythology with space opera."),
]

UNRELATED = [
    ("What is the boiling point of water at sea level?",
     "Water boils at 100 degrees Celsius at sea level."),
    ("How many continents are there?", "There are seven continents."),
    ("What is photosynthesis?",
     "Photosynthesis is the process by which plants turn light, water and carbon dioxide into "
     "sugar and oxygen."),
    ("Who painted the Mona Lisa?", "Leonardo da Vinci painted the Mona Lisa."),
    ("What is the capital of Japan?", "The capital of Japan is Tokyo."),
    ("How far is the Moon from Earth?", "The Moon is about 384,400 kilometres from Earth."),
    ("What does DNA stand for?", "DNA stands for deoxyribonucleic acid."),
    ("How many legs does a spider have?", "A spider has eight legs."),
    ("What is the largest ocean?", "The Pacific Ocean is the largest ocean."),
    ("Who wrote Pride and Prejudice?", "Jane Austen wrote Pride and Prejudice."),
    ("What is the speed of light?", "Light travels at about 299,792 kilometres per second."),
    ("What gas do humans exhale?", "Humans exhale carbon dioxide."),
    ("What is the square root of 144?", "The square root of 144 is 12."),
    ("Which planet is known as the Red Planet?", "Mars is known as the Red Planet."),
    ("How many bones are in the adult human body?", "An adult human has 206 bones."),
    ("What language is spoken in Brazil?", "Portuguese is the main language of Brazil."),
    ("What is the chemical symbol for gold?", "The chemical symbol for gold is Au."),
    ("Who developed the theory of relativity?", "Albert Einstein developed the theory of relativity."),
    ("What is the tallest mountain on Earth?", "Mount Everest is the tallest mountain above sea level."),
    ("How many minutes are in a day?", "There are 1,440 minutes in a day."),
    ("What is the freezing point of water in Fahrenheit?", "Water freezes at 32 degrees Fahrenheit."),
    ("What is the main ingredient in guacamole?", "Avocado is the main ingredient in guacamole."),
    ("Who was the first person to walk on the Moon?", "Neil Armstrong was the first person on the Moon."),
    ("What organ pumps blood through the body?", "The heart pumps blood through the body."),
    ("Which instrument has 88 keys?", "A standard piano has 88 keys."),
    ("What is the longest river in Africa?", "The Nile is the longest river in Africa."),
    ("How many sides does a hexagon have?", "A hexagon has six sides."),
    ("What is the currency of the United Kingdom?", "The pound sterling is the UK currency."),
    ("What do bees make?", "Bees make honey and beeswax."),
    ("What is the hardest natural substance?", "Diamond is the hardest natural substance."),
]

DETECT_NONE = ["None", "`None`", "none.", "NONE", "None of the subjects are leaked.\nNone"]


def rule(match, response, all_of=None):
    r = {"match": match, "response": response}
    if all_of:
        r["all_of"] = all_of
    return r


def leak_scenario(name, subject, scores, expected, detect_reply=None, extra_targets=(),
                  critic_replies=None, calls=None):
    canonical, query, vanilla, clean, composed = subject
    targets = [canonical, *extra_targets]
    detected = 1 if detect_reply is None else detect_reply.count("|") + 1
    detect_reply = (detect_reply or canonical).replace("|", ", ")
    variants = [f"{OPENERS[i]} {clean.lower()[0]}{clean[1:]}." for i in range(K)]
    rules = [rule(COMPOSER, composed)]
    for i, v in enumerate(variants):
        reply = (critic_replies or {}).get(i, f"Rating: {scores[i]}")
        rules.append(rule(CRITIC, reply, [OPENERS[i]]))
    for i, v in enumerate(variants):
        rules.append(rule(ERASE, v, [f"variation {i + 1} of"]))
    rules.append(rule(DETECT, detect_reply))
    rules.append(rule(VANILLA, vanilla))
    if calls is None:
        calls = 2 + K + K * detected + (1 if expected == "composed_without_targets" else 0)
    return {
        "name": name,
        "rules": rules,
        "fallback": "",
        "forget_names": targets,
        "query": query,
        "expected": expected,
        "expected_backend_calls": calls,
    }


def top_mean(scores, j=3):
    return sum(sorted(scores, reverse=True)[:j]) / j


def main(out_dir):
    rng = random.Random(20250101)
    out = Path(out_dir)
    out.mkdir(parents=True, exist_ok=True)
    for old in out.glob("*.json"):
        old.unlink()
    scenarios = []

    scenarios.append(leak_scenario("leak_000_yule_ball", SUBJECTS[0], [5, 5, 4, 5, 5],
                                   "composed_without_targets"))
    scenarios.append(leak_scenario("leak_001_low_scores", SUBJECTS[0], [3, 3, 2, 3, 3],
                                   "null_response"))
    scenarios.append(leak_scenario("leak_002_boundary_exact", SUBJECTS[2], [4, 4, 4, 3, 2],
                                   "composed_without_targets"))
    scenarios.append(leak_scenario("leak_003_boundary_below", SUBJECTS[2], [4, 4, 3, 3, 3],
                                   "null_response"))
    scenarios.append(leak_scenario("leak_004_unparseable_critic", SUBJECTS[3], [5] * 5,
                                   "null_response",
                                   critic_replies={i: "Excellent work." for i in range(K)}))
    scenarios.append(leak_scenario("leak_005_decorated_detection", SUBJECTS[1], [5, 4, 5, 4, 5],
                                   "composed_without_targets",
                                   detect_reply=f"- {SUBJECTS[1][0]}."))
    scenarios.append(leak_scenario("leak_006_two_targets", SUBJECTS[4], [5, 5, 5, 4, 4],
                                   "composed_without_targets",
                                   detect_reply=f"{SUBJECTS[4][0]}|{SUBJECTS[9][0]}",
                                   extra_targets=[SUBJECTS[9][0]]))

    index = len(scenarios)
    while index < 60:
        subject = SUBJECTS[index % len(SUBJECTS)]
        scores = [rng.randint(1, 5) for _ in range(K)]
        expected = "composed_without_targets" if top_mean(scores) >= 4 else "null_response"
        distractors = rng.sample([s[0] for s in SUBJECTS if s[0] != subject[0]], rng.randint(0, 4))
        scenarios.append(leak_scenario(f"leak_{index:03d}_{expected.split('_')[0]}", subject,
                                       scores, expected, extra_targets=distractors))
        index += 1

    forget_pool = [s[0] for s in SUBJECTS]
    for i in range(60):
        query, answer = UNRELATED[i % len(UNRELATED)]
        reply = DETECT_NONE[i % len(DETECT_NONE)]
        if i % 10 == 9:
            reply = "Harry Potter"  # outside the forget set: discarded
        targets = rng.sample(forget_pool, rng.randint(1, 6))
        scenarios.append({
            "name": f"unrelated_{i:03d}",
            "rules": [rule(DETECT, reply), rule(VANILLA, answer)],
            "fallback": "",
            "forget_names": targets,
            "query": query if i < len(UNRELATED) else query + " Please answer briefly.",
            "expected": "vanilla_passthrough",
            "expected_backend_calls": 2,
        })

    for s in scenarios:
        (out / f"{s['name']}.json").write_text(json.dumps(s, indent=2, ensure_ascii=False) + "\n")
    print(f"wrote {len(scenarios)} scenarios to {out}")


if __name__ == "__main__":
    main(sys.argv[1] if len(sys.argv) > 1 else Path(__file__).resolve().parent.parent / "data" / "scenarios")
