y = 0
while x == 0:
    pass
y = 1
