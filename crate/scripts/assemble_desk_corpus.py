"""One sentence per line, shuffled with a fixed seed."""
import glob
import json
import os
import random
import re
import sys

src, dst = sys.argv[1], sys.argv[2]
out = []


def sentences(text):
    text = re.sub(r"\s+", " ", text)
    for s in re.split(r"(?<=[.!?;])\s+(?=[A-Z\"'])", text):
        s = s.strip()
        if s:
            out.append(s)


for f in sorted(glob.glob(os.path.join(src, "stdlib-datasets-sotu-0.2.3/package/data/*.txt"))):
    sentences(open(f, encoding="utf-8").read())
sentences(open(os.path.join(src, "stdlib-datasets-moby-dick-0.2.3/package/data/data.txt"), encoding="utf-8").read())
verses = json.load(open(os.path.join(src, "kjv-1.0.0/package/json/verses-1769.json"), encoding="utf-8"))
for text in verses.values():
    out.append(re.sub(r"[\[\]]", "", text).strip())

# Source order puts each book in one long run; shuffling removes that drift.
random.Random(1).shuffle(out)
with open(dst, "w", encoding="utf-8") as f:
    f.write("\n".join(out) + "\n")
