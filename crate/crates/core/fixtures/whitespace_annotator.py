# Reads one JSON request per line and answers with whitespace tokens.
# Capitalized tokens become NE spans, tokens ending in "ed" VP spans.
import json
import re
import sys

for line in sys.stdin:
    req = json.loads(line)
    tokens, spans = [], []
    for i, m in enumerate(re.finditer(r"\S+", req["text"])):
        tokens.append({"t": m.group(), "s": m.start(), "e": m.end()})
        if m.group()[0].isupper():
            spans.append({"s": i, "e": i + 1, "kind": "NE", "label": "X"})
        if m.group().endswith("ed"):
            spans.append({"s": i, "e": i + 1, "kind": "VP"})
    print(json.dumps({"sid": req["sid"], "tokens": tokens, "spans": spans}), flush=True)
