from icadetect import text


def make_docs(texts, labels=None):
    labels = labels or ["reliable"] * len(texts)
    return [text.Document(str(i), t, text.Label(l)) for i, (t, l) in enumerate(zip(texts, labels))]
