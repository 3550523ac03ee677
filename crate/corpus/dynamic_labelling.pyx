# a is local: it may carry x into y, then z, without z ever reaching y.
a = x
y = a
a = z
