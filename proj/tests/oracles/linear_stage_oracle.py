"""Independent numpy reference for the hand-sized 2D case frozen in
test_polynomial.cpp and test_linear_stage.cpp. Prints C++ initialisers."""
import numpy as np
from numpy.polynomial import polynomial as P

A = np.array([[0.0, 0.0], [200.0, 0.0], [0.0, 200.0]])
B = np.array([[150.0, 150.0], [0.0, 120.0]])
p = np.array([60.0, 70.0])

ra = np.linalg.norm(A - p, axis=1)
rb = np.linalg.norm(B - p, axis=1)
da = ra[1:] - ra[0]
db = rb[1:] - rb[0]

# |p - p_i|^2 = (r_ref + d_i)^2 minus |p - p_ref|^2 = r_ref^2
rows, crow, hrow = [], [], []
for P_, d, sysc in ((A, da, 0), (B, db, 1)):
    for i in range(1, len(P_)):
        rows.append(P_[0] - P_[i])
        c = [0.0, 0.0]
        c[sysc] = d[i - 1]
        crow.append(c)
        hrow.append(0.5 * (d[i - 1] ** 2 + P_[0] @ P_[0] - P_[i] @ P_[i]))
G = np.array(rows)
C = np.array(crow)
h = np.array(hrow)
Gp = np.linalg.solve(G.T @ G, G.T)
S = Gp @ C
g = Gp @ h

def conic(pref, r_is_x):
    u = g - pref
    s1, s2 = S[:, 0], S[:, 1]
    # |s1 x + s2 y + u|^2 - (x or y)^2
    a = s1 @ s1 - (1 if r_is_x else 0)
    b = 2 * s1 @ s2
    c = s2 @ s2 - (0 if r_is_x else 1)
    return np.array([a, b, c, 2 * s1 @ u, 2 * s2 @ u, u @ u])

q1 = conic(A[0], True)
q2 = conic(B[0], False)

def fmt(v):
    return "{" + ", ".join(f"{x:.17g}" for x in np.ravel(v)) + "}"

print("residual_at_truth", G @ p - C @ np.array([ra[0], rb[0]]) - h)
print("G", fmt(G)); print("C", fmt(C)); print("h", fmt(h))
print("S", fmt(S)); print("g", fmt(g))
print("first", fmt(q1)); print("second", fmt(q2))

# Eliminate y^2: c2*Q1 - c1*Q2 is linear in y -> y (t1 x + t2) = t3 x^2 + t4 x + t5
a1, b1, c1, d1, e1, f1 = q1
a2, b2, c2, d2, e2, f2 = q2
num = np.array([-(f1 * c2 - f2 * c1), -(d1 * c2 - d2 * c1), -(a1 * c2 - a2 * c1)])  # ascending
den = np.array([e1 * c2 - e2 * c1, b1 * c2 - b2 * c1])
print("t", fmt([den[1], den[0], num[2], num[1], num[0]]))
# quartic: substitute y = num/den into Q1, multiply by den^2
x = np.array([0.0, 1.0])
pad = lambda v: np.pad(v, (0, 5 - len(v)))
def substitute(a1, b1, c1, d1, e1, f1):
    return (a1 * pad(P.polymul(P.polymul(x, x), P.polymul(den, den)))
         + b1 * pad(P.polymul(P.polymul(x, num), den))
         + c1 * pad(P.polymul(num, num))
         + d1 * pad(P.polymul(x, P.polymul(den, den)))
         + e1 * pad(P.polymul(num, den))
         + f1 * pad(P.polymul(den, den)))
quart = substitute(*q1)
print("quartic_first_desc", fmt(quart[::-1]))
print("quartic_second_desc", fmt(substitute(*q2)[::-1]))
roots = np.roots(quart[::-1])
print("quartic_roots", roots)
print("truth", ra[0], rb[0])
