"""Independent numpy reference for the fixed 3D geometry frozen in
test_analysis.cpp. Q is built as T diag(sigma^2) T^T from an explicit
differencing operator T, not from the block formula."""
import numpy as np

A = np.array([[0, 0, 100], [200, 0, 0], [200, 200, 100], [0, 200, 0]], float)
B = np.array([[100, 0, 120], [200, 100, 30], [100, 200, 120], [0, 100, 30], [100, 100, 200]], float)
sa = np.array([0.5, 1.0, 1.5, 2.0])
sb = np.array([1.0, 0.7, 0.3, 2.5, 1.2])
p = np.array([90.0, 110.0, 25.0])
M, N = len(A), len(B)

T = np.zeros((M + N - 2, M + N))
for i in range(1, M):
    T[i - 1, i] = 1; T[i - 1, 0] = -1
for j in range(1, N):
    T[M - 2 + j, M + j] = 1; T[M - 2 + j, M] = -1
Q = T @ np.diag(np.r_[sa, sb] ** 2) @ T.T

def f(x):
    ra = np.linalg.norm(A - x, axis=1); rb = np.linalg.norm(B - x, axis=1)
    return np.r_[ra[1:] - ra[0], rb[1:] - rb[0]]

# analytic derivative of f w.r.t. p
la = (A - p) / np.linalg.norm(A - p, axis=1)[:, None]
lb = (B - p) / np.linalg.norm(B - p, axis=1)[:, None]
H = np.r_[la[0] - la[1:], lb[0] - lb[1:]]
eps = 1e-5
Hfd = np.array([(f(p + eps * e) - f(p - eps * e)) / (2 * eps) for e in np.eye(3)]).T
assert np.allclose(H, Hfd, rtol=0, atol=1e-8)
F = H.T @ np.linalg.solve(Q, H)
crlb = np.linalg.inv(F)

# TOA FIM over [p, bA, bB]
Ht = np.zeros((M + N, 5))
Ht[:M, :3] = la; Ht[M:, :3] = lb; Ht[:M, 3] = -1; Ht[M:, 4] = -1
Ft = Ht.T @ np.diag(1 / np.r_[sa, sb] ** 2) @ Ht
jpos = Ft[:3, :3] - Ft[:3, 3:] @ np.linalg.solve(Ft[3:, 3:], Ft[3:, :3])
print("toa/tdoa rel", np.linalg.norm(jpos - F) / np.linalg.norm(F))

fmt = lambda v: "{" + ", ".join(f"{x:.17g}" for x in np.ravel(v)) + "}"
print("Q", fmt(Q))
print("fim", fmt(F))
print("crlb", fmt(crlb))
print("error_lb", f"{np.sqrt(np.trace(crlb)):.17g}")
