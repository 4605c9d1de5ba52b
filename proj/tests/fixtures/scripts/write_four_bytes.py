import sys

with open(sys.argv[1], "wb") as out:
    out.write(b"SEED")
