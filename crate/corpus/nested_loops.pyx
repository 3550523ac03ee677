i = 0
acc = 0
while i < n:
    j = 0
    while j < m:
        acc = acc + j
        tmp = acc
        j = j + 1
    i = i + 1
result = acc
