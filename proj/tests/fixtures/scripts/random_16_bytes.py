import sys

with open("/dev/urandom", "rb") as rng, open(sys.argv[1], "wb") as out:
    out.write(rng.read(16))
