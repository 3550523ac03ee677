total = 0
k = 0
while k < n:
    total = total + x
    k = k + 1
out = total
