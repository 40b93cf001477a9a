#!/usr/bin/env python3
"""Regenerates the synthetic test fixtures under tests/fixtures."""

import json
import random
from pathlib import Path

ROOT = Path(__file__).resolve().parent.parent / "tests" / "fixtures"

PT = {
    "det": ["o", "a", "um", "uma", "este", "esta", "aquele", "nosso", "cada", "outro"],
    "noun": [
        "governo", "cidade", "escola", "professor", "estudante", "mercado", "empresa", "pesquisa", "universidade",
        "projeto", "comunidade", "hospital", "biblioteca", "rio", "floresta", "prefeitura", "trabalhador",
        "economia", "conselho", "jornal", "festival", "aldeia", "fazenda", "canção", "região", "população",
        "família", "criança", "história", "tradição", "ciência", "tecnologia", "saúde", "educação", "política",
        "cultura", "música", "viagem", "estação", "manhã", "tarde", "semana", "relatório", "decisão", "opinião",
    ],
    "verb": [
        "apresentou", "discutiu", "recebeu", "construiu", "publicou", "anunciou", "organizou", "aprovou",
        "visitou", "investigou", "defendeu", "melhorou", "ampliou", "criticou", "celebrou", "financiou",
        "acompanhou", "explicou", "descobriu", "analisou", "preparou", "reuniu", "ofereceu", "transformou",
    ],
    "adj": [
        "novo", "antigo", "importante", "pequeno", "grande", "público", "regional", "nacional", "moderno",
        "tradicional", "difícil", "econômico", "social", "brasileiro", "histórico", "rápido", "cuidadoso",
        "necessário", "principal", "recente", "local", "próximo", "bonito", "complexo",
    ],
    "adv": [
        "ontem", "hoje", "recentemente", "finalmente", "também", "ainda", "sempre", "rapidamente",
        "novamente", "durante a semana", "no ano passado", "com muito cuidado", "depois da reunião",
    ],
    "prep": ["para a", "com a", "sobre a", "na", "pela", "durante a", "contra a", "desde a", "entre a"],
    "conj": ["e", "mas", "porque", "enquanto", "quando", "embora", "porém", "então"],
}

EN = {
    "det": ["the", "a", "this", "that", "our", "every", "another", "their", "some", "each"],
    "noun": [
        "government", "city", "school", "teacher", "student", "market", "company", "research", "university",
        "project", "community", "hospital", "library", "river", "forest", "council", "worker", "economy",
        "newspaper", "festival", "village", "farm", "song", "region", "population", "family", "child",
        "history", "tradition", "science", "technology", "health", "education", "policy", "culture", "music",
        "journey", "station", "morning", "evening", "week", "report", "decision", "opinion",
    ],
    "verb": [
        "presented", "discussed", "received", "built", "published", "announced", "organized", "approved",
        "visited", "investigated", "defended", "improved", "expanded", "criticized", "celebrated", "funded",
        "followed", "explained", "discovered", "analyzed", "prepared", "gathered", "offered", "transformed",
    ],
    "adj": [
        "new", "old", "important", "small", "large", "public", "regional", "national", "modern",
        "traditional", "difficult", "economic", "social", "british", "historic", "quick", "careful",
        "necessary", "main", "recent", "local", "nearby", "beautiful", "complex",
    ],
    "adv": [
        "yesterday", "today", "recently", "finally", "also", "still", "always", "quickly", "again",
        "during the week", "last year", "with great care", "after the meeting",
    ],
    "prep": ["for the", "with the", "about the", "in the", "through the", "during the", "against the",
             "since the", "between the"],
    "conj": ["and", "but", "because", "while", "when", "although", "however", "so"],
}


def clause(rng, lex, lang):
    if lang == "pt":
        subject = f"{rng.choice(lex['det'])} {rng.choice(lex['noun'])} {rng.choice(lex['adj'])}"
        obj = f"{rng.choice(lex['det'])} {rng.choice(lex['noun'])}"
    else:
        subject = f"{rng.choice(lex['det'])} {rng.choice(lex['adj'])} {rng.choice(lex['noun'])}"
        obj = f"{rng.choice(lex['det'])} {rng.choice(lex['noun'])}"
    parts = [subject, rng.choice(lex["verb"]), obj]
    if rng.random() < 0.5:
        parts.append(f"{rng.choice(lex['prep'])} {rng.choice(lex['noun'])}")
    if rng.random() < 0.5:
        parts.append(rng.choice(lex["adv"]))
    return " ".join(parts)


def sentence(rng, lex, lang, end="."):
    text = clause(rng, lex, lang)
    if rng.random() < 0.4:
        text += f", {rng.choice(lex['conj'])} {clause(rng, lex, lang)}"
    return text[0].upper() + text[1:] + end


def paragraph(rng, lex, lang, n_sentences, end="."):
    return " ".join(sentence(rng, lex, lang, end) for _ in range(n_sentences))


def write_lines(path, lines):
    path.parent.mkdir(parents=True, exist_ok=True)
    path.write_text("".join(line + "\n" for line in lines), encoding="utf-8")


def write_jsonl(path, docs):
    path.parent.mkdir(parents=True, exist_ok=True)
    with path.open("w", encoding="utf-8") as out:
        for d in docs:
            out.write(json.dumps(d, ensure_ascii=False) + "\n")


def langid_sets(rng):
    for lang, lex, label in (("pt", PT, "por"), ("en", EN, "eng")):
        sentences = [sentence(rng, lex, lang) for _ in range(1200)]
        write_lines(ROOT / "langid" / f"{label}.train.txt", sentences[:1000])
        write_lines(ROOT / "langid" / f"{label}.heldout.txt", sentences[1000:])


def clean_doc(rng):
    lines = [paragraph(rng, PT, "pt", rng.randint(2, 3)) for _ in range(rng.randint(4, 7))]
    return "\n".join(lines)


def short_line(rng):
    while True:
        line = f"{rng.choice(PT['det'])} {rng.choice(PT['noun'])} {rng.choice(PT['adj'])}."
        if len(line) <= 30:
            return line[0].upper() + line[1:]


def mixed_corpus(rng):
    docs = []
    originals = []
    for i in range(70):
        text = clean_doc(rng)
        source = "web" if i % 2 == 0 else "news"
        docs.append({"id": f"pt-{i:03d}", "text": text, "source": source})
        originals.append((text, source))
    for i in range(10):
        text = "\n".join(paragraph(rng, EN, "en", rng.randint(2, 3)) for _ in range(rng.randint(4, 6)))
        docs.append({"id": f"en-{i:03d}", "text": text, "source": "web"})
    for i in range(10):
        text, source = originals[i * 7]
        if i % 2:
            # Near copy: one trailing sentence appended.
            text = text + "\n" + sentence(rng, PT, "pt")
        docs.append({"id": f"zz-dup-{i:03d}", "text": text, "source": source})
    for i in range(10):
        kind = i % 3
        if kind == 0:
            # Lines without terminal punctuation.
            lines = [paragraph(rng, PT, "pt", 2, end="") for _ in range(5)]
        elif kind == 1:
            # One line repeated.
            line = paragraph(rng, PT, "pt", 2)
            lines = [line] * 6
        else:
            # Mostly short lines.
            lines = [paragraph(rng, PT, "pt", 3)] + [short_line(rng) for _ in range(8)]
        docs.append({"id": f"lowq-{i:03d}", "text": "\n".join(lines), "source": "news"})
    rng.shuffle(docs)
    write_jsonl(ROOT / "mixed" / "part-00000.jsonl", docs[:50])
    write_jsonl(ROOT / "mixed" / "part-00001.jsonl", docs[50:])


def tokenizer_corpus(rng):
    docs = [{"id": f"tok-{i:03d}", "text": clean_doc(rng), "source": "web"} for i in range(60)]
    write_jsonl(ROOT / "tokenizer" / "corpus.jsonl", docs)


STOPWORDS = """a ao aos as à às com como da das de do dos e ela elas ele eles em entre era essa esse esta este
eu foi for isso isto já lhe mais mas me mesmo meu minha muito na nas nem no nos nossa nosso num numa não o os
ou para pela pelas pelo pelos por porque porém quando que quem se sem ser seu sua são só também te tem um uma
umas uns você cada aquele aquela outro outra então embora enquanto desde contra durante sobre ainda sempre""".split()


def main():
    rng = random.Random(20240229)
    langid_sets(rng)
    mixed_corpus(rng)
    tokenizer_corpus(rng)
    write_lines(ROOT / "stopwords.pt.txt", sorted(set(STOPWORDS)))


if __name__ == "__main__":
    main()
