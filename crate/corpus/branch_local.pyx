if h == 1:
    t = 1
else:
    t = 0
secret_out = t
