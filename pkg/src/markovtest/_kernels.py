"""Fused loss/gradient kernel for stacked single-hidden-layer mixture networks.

Same arithmetic as ``nn._loss_grad`` restricted to one hidden layer, with
rows processed one at a time so no (K, n, G) temporaries are materialised.
"""

import math

import numpy as np
from numba import njit

_HALF_LOG_2PI = 0.5 * math.log(2.0 * math.pi)


@njit(cache=True)
def loss_grad_h1(W1, b1, Wo, bo, Wa, ba, Wm, bm, Ws, bs, X, y, w, floor,
                 gW1, gb1, gWo, gbo, gWa, gba, gWm, gbm, gWs, gbs, loglik):
    K, n, d = X.shape
    U = W1.shape[1]
    G = Wo.shape[1]
    z1 = np.empty(U)
    a1 = np.empty(U)
    h = np.empty(G)
    la = np.empty(G)
    mu = np.empty(G)
    s = np.empty(G)
    sig = np.empty(G)
    comp = np.empty(G)
    dla = np.empty(G)
    dmu = np.empty(G)
    ds = np.empty(G)
    dh = np.empty(G)
    for k in range(K):
        gW1[k] = 0.0
        gb1[k] = 0.0
        gWo[k] = 0.0
        gbo[k] = 0.0
        gWa[k] = 0.0
        gba[k] = 0.0
        gWm[k] = 0.0
        gbm[k] = 0.0
        gWs[k] = 0.0
        gbs[k] = 0.0
        for i in range(n):
            for u in range(U):
                acc = b1[k, u]
                for j in range(d):
                    acc += W1[k, u, j] * X[k, i, j]
                z1[u] = acc
                a1[u] = acc if acc > 0.0 else 0.0
            for g in range(G):
                acc = bo[k, g]
                for u in range(U):
                    acc += Wo[k, g, u] * a1[u]
                h[g] = acc
            for g in range(G):
                ta = ba[k, g]
                tm = bm[k, g]
                ts = bs[k, g]
                for q in range(G):
                    ta += Wa[k, g, q] * h[q]
                    tm += Wm[k, g, q] * h[q]
                    ts += Ws[k, g, q] * h[q]
                la[g] = ta
                mu[g] = tm
                s[g] = ts
            m = la[0]
            for g in range(1, G):
                if la[g] > m:
                    m = la[g]
            acc = 0.0
            for g in range(G):
                acc += math.exp(la[g] - m)
            lz = m + math.log(acc)
            for g in range(G):
                la[g] -= lz
                sg = s[g]
                if sg > 0.0:
                    sp = sg + math.log1p(math.exp(-sg))
                else:
                    sp = math.log1p(math.exp(sg))
                sig[g] = sp + floor
                r = (y[k, i] - mu[g]) / sig[g]
                comp[g] = la[g] - _HALF_LOG_2PI - math.log(sig[g]) - 0.5 * r * r
            m = comp[0]
            for g in range(1, G):
                if comp[g] > m:
                    m = comp[g]
            acc = 0.0
            for g in range(G):
                acc += math.exp(comp[g] - m)
            ll = m + math.log(acc)
            loglik[k, i] = ll
            wi = w[k, i]
            if wi == 0.0:
                continue
            for g in range(G):
                gam = math.exp(comp[g] - ll)
                resid = y[k, i] - mu[g]
                sg = sig[g]
                dla[g] = (math.exp(la[g]) - gam) * wi
                dmu[g] = -gam * resid / (sg * sg) * wi
                sgm = 1.0 / (1.0 + math.exp(-s[g]))
                ds[g] = gam * (1.0 / sg - resid * resid / (sg * sg * sg)) * wi * sgm
            for q in range(G):
                dh[q] = 0.0
            for g in range(G):
                gba[k, g] += dla[g]
                gbm[k, g] += dmu[g]
                gbs[k, g] += ds[g]
                for q in range(G):
                    gWa[k, g, q] += dla[g] * h[q]
                    gWm[k, g, q] += dmu[g] * h[q]
                    gWs[k, g, q] += ds[g] * h[q]
                    dh[q] += dla[g] * Wa[k, g, q] + dmu[g] * Wm[k, g, q] + ds[g] * Ws[k, g, q]
            for g in range(G):
                gbo[k, g] += dh[g]
                for u in range(U):
                    gWo[k, g, u] += dh[g] * a1[u]
            for u in range(U):
                if z1[u] <= 0.0:
                    continue
                dz = 0.0
                for g in range(G):
                    dz += dh[g] * Wo[k, g, u]
                gb1[k, u] += dz
                for j in range(d):
                    gW1[k, u, j] += dz * X[k, i, j]
