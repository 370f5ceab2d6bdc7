"""Smoke test for the crom extension module. Run after `pip install`."""

import math
import random

import crom

rng = random.Random(7)
n = 256
x = [rng.gauss(0.0, 1.0) for _ in range(n)]

p = crom.CromParams(n, 1.0, k=1, scheme="uniform-haar", seed=3)
assert p.iterations == math.floor(n * 1.0 / math.log(n) + 1e-9), p
enc = crom.encode(x, p)
assert len(enc) == p.iterations
norms = enc.residual_norms
assert len(norms) == p.iterations + 1
assert all(b <= a + 1e-12 for a, b in zip(norms, norms[1:]))

# prefix decodes agree with the encoder's residuals
msgs = enc.messages
for i in (0, 1, p.iterations // 2, p.iterations):
    xh = crom.decode_prefix(msgs[:i], p)
    err = math.sqrt(sum((a - b) ** 2 for a, b in zip(x, xh)))
    assert abs(err - norms[i]) <= 1e-9 * max(1.0, norms[0]), (i, err, norms[i])

trace = crom.distortion_trace(x, enc)
assert len(trace) == p.iterations + 1

data = enc.to_bytes()
q, got, truncated, partial = crom.read_stream(data)
assert got == msgs and not truncated and not partial
assert q.n == n and q.seed == 3

_, few, _, _ = crom.read_stream(data, max_messages=5)
assert few == msgs[:5]
_, cut, truncated, _ = crom.read_stream(data[: len(data) - 3])
assert truncated and cut == msgs[: len(cut)]

try:
    crom.read_stream(b"nope" + data[4:])
except crom.StreamError:
    pass
else:
    raise AssertionError("bad magic accepted")

try:
    crom.CromParams(n, -1.0)
except ValueError:
    pass
else:
    raise AssertionError("negative rate accepted")

z = crom.ZeroRateCode(1024, k=1)
y = [rng.gauss(0.0, 1.0) for _ in range(1024)]
assert z.decode(z.encode(y))[crom.top_k(y, 1)[0]] > 0
assert z.distortion(y) < 1.0

c = crom.ChannelCode(256)
assert c.eps > 0
assert c.decode(c.encode(17)) == 17
assert 0.0 <= c.error_rate(200, seed=1) <= 1.0

csv = crom.simulate("crom", 64, rate=0.5, trials=5)
assert csv.startswith("# crom-curve v1"), csv[:40]

print("smoke test ok")
