# Diffie-Hellman key agreement with an intruder I between A and B.
# g and p are public; a, b and i are the private exponents.

def creating_m_a():
    r = 1
    n = 0
    while n < a:
        r = r * g % p
        n = n + 1
    return downgrade(r, {'B'})

def creating_m_b():
    r = 1
    n = 0
    while n < b:
        r = r * g % p
        n = n + 1
    return downgrade(r, {'A'})

# I answers A while pretending to be B.
def creating_m_i():
    r = 1
    n = 0
    while n < i:
        r = r * g % p
        n = n + 1
    return downgrade(r, {'A'})

# I answers B while pretending to be A.
def creating_m_i_for_b():
    r = 1
    n = 0
    while n < i:
        r = r * g % p
        n = n + 1
    return downgrade(r, {'B'})

def creating_k_ai():
    m = creating_m_i()
    r = 1
    n = 0
    while n < a:
        r = r * m % p
        n = n + 1
    return r

def creating_k_bi():
    m = creating_m_i_for_b()
    r = 1
    n = 0
    while n < b:
        r = r * m % p
        n = n + 1
    return r

m_a = creating_m_a()
m_b = creating_m_b()
k_ai = creating_k_ai()
k_bi = creating_k_bi()
