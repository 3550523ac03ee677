def double(v):
    w = v + v
    return w

y = double(x)
z = y + 1
if z > 2:
    out = 1
else:
    out = 0
