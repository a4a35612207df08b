"""Event-driven numba kernels.

Every clock in these loops is an exponential draw or a closed-form sojourn
integral; there is no time discretization anywhere except the piecewise-linear
driver of the flow integrator.  Kernels draw from a numpy Generator passed in
by the caller, so replicas are bit-reproducible from their (seed, stream_id)
address regardless of threading.
"""
import numpy as np
from numba import njit

# status codes shared by the kernels
OK = 0
BOUNDARY = 1       # absorbed at the truncated-domain edge (flagged replica)
CAP = 2            # event buffer exhausted; caller enlarges and reruns
RANGE = 3          # flow: driver left the tracked range; caller widens grid
SINGULAR = 4       # flow: 1 - 2*Lambda under the singularity floor
TARGET = 5         # a t/u-clock target was reached mid-run
RACE_UP = 6
RACE_DOWN = 7

_EMPTY_F = np.empty(0, dtype=np.float64)
_EMPTY_I = np.empty(0, dtype=np.int64)

# accumulator slots for flow_kernel
ACC_T = 0      # time-change integral
ACC_QV = 1     # sum of squared xi increments
ACC_QVP = 2    # integral of (1-2*Lambda(xi))^-2
ACC_F = 3      # previous t-integrand (trapezoid)
ACC_G = 4      # previous qv-integrand
ACC_XI = 5     # previous xi
ACC_IDX = 6    # previous bracket index
ACC_MONO = 7   # worst ordering deficit observed (exact-arithmetic value is 0)
ACC_LIP = 8    # worst |dPsi| - du excess observed
NACC = 9


@njit(cache=True, nogil=True)
def vrjp_kernel(rg, L, x0, rate_c, dens, t_max, u_max,
                chk_t, chk_x, chk_maxabs, times, sites, cap):
    """Reinforced walk on the lattice: rate to a neighbor is rate_c * L[neighbor].

    L (the site occupation profile, density normalization ``dens = 2^n``) is
    updated in place.  Returns (status, nev, t, u, x, nchk_done).  The u-clock
    is only integrated when u_max is finite.
    """
    nsites = L.shape[0]
    x = x0
    t = 0.0
    u = 0.0
    nev = 0
    ichk = 0
    nchk = chk_t.shape[0]
    maxabs = 0
    track_u = u_max < np.inf
    status = OK
    while True:
        if x == 0 or x == nsites - 1:
            status = BOUNDARY
            break
        Lm = L[x - 1]
        Lp = L[x + 1]
        rtot = rate_c * (Lm + Lp)
        tau = rg.exponential(1.0 / rtot)
        a = L[x]
        t_end = t + tau
        du_full = 0.0
        c = 0.0
        if track_u:
            c = (Lm + Lp) / (2.0 * Lm * Lp)
            du_full = c * (1.0 / a - 1.0 / (a + dens * tau)) / dens
        stop_t = t_end >= t_max
        stop_u = track_u and (u + du_full >= u_max)
        s = tau
        if stop_t:
            s = t_max - t
        if stop_u:
            rem = u_max - u
            inv = 1.0 / a - rem * dens / c
            s_u = (1.0 / inv - a) / dens
            if not stop_t or s_u < s:
                s = s_u
                stop_t = False
        # checkpoints land inside [t, t + s) while the walker sits at x
        while ichk < nchk and chk_t[ichk] < t + s:
            chk_x[ichk] = x
            chk_maxabs[ichk] = maxabs
            ichk += 1
        if stop_t or stop_u:
            L[x] += dens * s
            if track_u:
                u = u_max if stop_u else u + c * (1.0 / a - 1.0 / (a + dens * s)) / dens
            t += s
            break
        t = t_end
        u += du_full
        L[x] += dens * tau
        if rg.random() * rtot < rate_c * Lp:
            x += 1
        else:
            x -= 1
        d = x - x0
        if d < 0:
            d = -d
        if d > maxabs:
            maxabs = d
        if cap > 0:
            if nev >= cap:
                status = CAP
                break
            times[nev] = t
            sites[nev] = x
        nev += 1
    return status, nev, t, u, x, ichk


@njit(cache=True, nogil=True)
def env_chain_kernel(rg, ratem, ratep, lam, L0arr, x0, dens,
                     q_max, t_target, u_target,
                     chk_clock, chk_vals, chk_x,
                     qtimes, ttimes, utimes, sites, cap):
    """Markov jump chain in a fixed environment with exact q/t/u clocks.

    Rates are time-homogeneous (ratem/ratep per site); lam accumulates the
    density-normalized local times in place.  The t-clock integrates
    (L0^2 + 2*lam)^(-1/2) dq and the u-clock (1 + 2*lam)^(-2) dq, both in
    closed form per sojourn.  chk_clock selects which clock the checkpoint
    values refer to (0 = q, 1 = t, 2 = u).
    """
    nsites = lam.shape[0]
    x = x0
    q = 0.0
    t = 0.0
    u = 0.0
    nev = 0
    ichk = 0
    nchk = chk_vals.shape[0]
    track_t = (t_target < np.inf) or (chk_clock == 1) or (cap > 0)
    track_u = (u_target < np.inf) or (chk_clock == 2)
    status = OK
    while True:
        if x == 0 or x == nsites - 1:
            status = BOUNDARY
            break
        rtot = ratem[x] + ratep[x]
        tau = rg.exponential(1.0 / rtot)
        la = lam[x]
        L0x = L0arr[x]
        sq_a = np.sqrt(L0x * L0x + 2.0 * la)
        lb = la + dens * tau
        t_end = t + (np.sqrt(L0x * L0x + 2.0 * lb) - sq_a) / dens if track_t else t
        u_end = u + (1.0 / (1.0 + 2.0 * la) - 1.0 / (1.0 + 2.0 * lb)) / (2.0 * dens) if track_u else u
        # earliest horizon inside this sojourn, if any
        s = tau
        stopping = False
        hit_target = False
        if q + tau >= q_max:
            s = q_max - q
            stopping = True
        if track_t and t_end >= t_target:
            root = dens * (t_target - t) + sq_a
            s_t = ((root * root - L0x * L0x) / 2.0 - la) / dens
            if s_t < s:
                s = s_t
            stopping = True
            hit_target = True
        if track_u and u_end >= u_target:
            inv = 1.0 / (1.0 + 2.0 * la) - 2.0 * dens * (u_target - u)
            s_u = ((1.0 / inv - 1.0) / 2.0 - la) / dens
            if s_u < s:
                s = s_u
            stopping = True
            hit_target = True
        # effective clock value at the end of this (possibly clipped) sojourn
        lb_eff = la + dens * s
        if chk_clock == 0:
            clock_end = q + s
        elif chk_clock == 1:
            clock_end = t + (np.sqrt(L0x * L0x + 2.0 * lb_eff) - sq_a) / dens
        else:
            clock_end = u + (1.0 / (1.0 + 2.0 * la) - 1.0 / (1.0 + 2.0 * lb_eff)) / (2.0 * dens)
        while ichk < nchk and chk_vals[ichk] < clock_end:
            chk_x[ichk] = x
            ichk += 1
        if stopping:
            lam[x] = lb_eff
            q += s
            if track_t:
                t += (np.sqrt(L0x * L0x + 2.0 * lb_eff) - sq_a) / dens
            if track_u:
                u += (1.0 / (1.0 + 2.0 * la) - 1.0 / (1.0 + 2.0 * lb_eff)) / (2.0 * dens)
            if hit_target:
                status = TARGET
            break
        q += tau
        t = t_end
        u = u_end
        lam[x] = lb
        if rg.random() * rtot < ratep[x]:
            x += 1
        else:
            x -= 1
        if cap > 0:
            if nev >= cap:
                status = CAP
                break
            qtimes[nev] = q
            ttimes[nev] = t
            utimes[nev] = u
            sites[nev] = x
        nev += 1
    return status, nev, q, t, u, x, ichk


@njit(cache=True, nogil=True)
def errw_kernel(rg, w, x0, ksteps, sites, cap):
    """Edge-reinforced discrete walk; w[i] is the weight of edge (i-1, i)."""
    nsites = w.shape[0] - 1
    x = x0
    status = OK
    for k in range(ksteps):
        if x == 0 or x == nsites - 1:
            status = BOUNDARY
            return status, k, x
        wl = w[x]
        wr = w[x + 1]
        if rg.random() * (wl + wr) < wr:
            w[x + 1] += 1.0
            x += 1
        else:
            w[x] += 1.0
            x -= 1
        if cap > 0 and k < cap:
            sites[k] = x
    return status, ksteps, x


@njit(cache=True, nogil=True)
def rwre_kernel(rg, wl, wr, x0, ksteps, sites, cap):
    """Discrete walk with static per-site left/right weights."""
    nsites = wl.shape[0]
    x = x0
    status = OK
    for k in range(ksteps):
        if x == 0 or x == nsites - 1:
            status = BOUNDARY
            return status, k, x
        if rg.random() * (wl[x] + wr[x]) < wr[x]:
            x += 1
        else:
            x -= 1
        if cap > 0 and k < cap:
            sites[k] = x
    return status, ksteps, x


@njit(cache=True, nogil=True)
def martingale_replay(times, sites, nev, x0, L, dens, inv_dens, t_final,
                      dus, dms, us, ms):
    """Replay a reinforced-walk log, producing the scale-martingale series.

    Per sojourn: du is the closed-form integral of the u-clock
    (L(x-)+L(x+)) / (2 L(x,t)^2 L(x-) L(x+)) dt, and the jump steps M by the
    signed edge gap 2^-n / (L(x) L(x')) evaluated at the jump time.
    L is modified in place; returns (u_final, m_final).
    """
    x = x0
    tprev = 0.0
    u = 0.0
    m = 0.0
    for k in range(nev):
        tau = times[k] - tprev
        a = L[x]
        Lm = L[x - 1]
        Lp = L[x + 1]
        c = (Lm + Lp) / (2.0 * Lm * Lp)
        aend = a + dens * tau
        du = c * (1.0 / a - 1.0 / aend) / dens
        L[x] = aend
        xn = sites[k]
        if xn > x:
            dm = inv_dens / (aend * Lp)
        else:
            dm = -inv_dens / (aend * Lm)
        u += du
        m += dm
        dus[k] = du
        dms[k] = dm
        us[k] = u
        ms[k] = m
        x = xn
        tprev = times[k]
    if t_final > tprev and 0 < x < L.shape[0] - 1:
        tau = t_final - tprev
        a = L[x]
        Lm = L[x - 1]
        Lp = L[x + 1]
        c = (Lm + Lp) / (2.0 * Lm * Lp)
        aend = a + dens * tau
        u += c * (1.0 / a - 1.0 / aend) / dens
        L[x] = aend
    return u, m


@njit(cache=True, nogil=True)
def mixture_time_replay(qtimes, sites, nev, x0, L0arr, dens, q_final, lam, ttimes):
    """Replay an environment-chain log, producing the exact t-clock per jump.

    lam must come in zeroed and accumulates the density local times; returns
    the final t (including the trailing partial sojourn up to q_final).
    """
    x = x0
    qprev = 0.0
    t = 0.0
    for k in range(nev):
        tau = qtimes[k] - qprev
        la = lam[x]
        L0x = L0arr[x]
        lb = la + dens * tau
        t += (np.sqrt(L0x * L0x + 2.0 * lb) - np.sqrt(L0x * L0x + 2.0 * la)) / dens
        lam[x] = lb
        ttimes[k] = t
        x = sites[k]
        qprev = qtimes[k]
    if q_final > qprev:
        tau = q_final - qprev
        la = lam[x]
        L0x = L0arr[x]
        lb = la + dens * tau
        t += (np.sqrt(L0x * L0x + 2.0 * lb) - np.sqrt(L0x * L0x + 2.0 * la)) / dens
        lam[x] = lb
    return t


@njit(cache=True, nogil=True)
def _lut_eval(lut_lo, lut_step, lut_f, xi):
    if lut_f.shape[0] == 1:
        return lut_f[0]
    pos = (xi - lut_lo) / lut_step
    i = int(pos)
    if i < 0:
        i = 0
    if i > lut_f.shape[0] - 2:
        i = lut_f.shape[0] - 2
    frac = pos - i
    if frac < 0.0:
        frac = 0.0
    if frac > 1.0:
        frac = 1.0
    return lut_f[i] * (1.0 - frac) + lut_f[i + 1] * frac


@njit(cache=True, nogil=True)
def flow_kernel(b, du, y, psi, mode, start_step, nsteps,
                lut_lo, lut_step, lut_f,
                acc, t_target, y1_hit, y2_hit,
                xi_out, lam_out, t_out, record,
                chk_steps, chk_psi,
                ev_u, ev_idx, ev_kind, ev_cap,
                sing_floor):
    """Exact integration of the bang-bang flow against a piecewise-linear driver.

    Per driver segment every crossing time solves a linear equation; a line
    meeting a segment of slope |m| < 1 enters sliding mode (pinned to the
    driver), otherwise it crosses and flips side.  After each segment the
    driver value is inverted in the tracked table to advance the reduced path
    xi, its interpolated local time Lambda, and the trapezoid accumulators for
    the time change and quadratic variation.

    Event kinds: 0 cross_up, 1 cross_down, 2 slide_begin, 3 slide_end.
    """
    nlines = y.shape[0]
    nev = 0
    ichk = 0
    nchk = chk_steps.shape[0]
    status = OK
    steps_done = 0
    idx = int(acc[ACC_IDX])
    for k in range(nsteps):
        s_abs = start_step + k
        b0 = b[s_abs]
        b1 = b[s_abs + 1]
        m = (b1 - b0) / du
        am = abs(m)
        u_seg = s_abs * du
        for j in range(nlines):
            p = psi[j]
            d0 = p - b0
            md = mode[j]
            ev = -1
            ev_time = u_seg
            if d0 > 0.0:
                crossed = False
                if m > -1.0:
                    sstar = d0 / (1.0 + m)
                    if sstar < du:
                        crossed = True
                if not crossed:
                    pn = p - du
                    md = 1
                elif am < 1.0:
                    pn = b1
                    if md != 0:
                        ev = 2
                        ev_time = u_seg + sstar
                    md = 0
                else:
                    pn = b0 + m * sstar + (du - sstar)
                    ev = 1
                    ev_time = u_seg + sstar
                    md = -1
            elif d0 < 0.0:
                crossed = False
                if m < 1.0:
                    sstar = -d0 / (1.0 - m)
                    if sstar < du:
                        crossed = True
                if not crossed:
                    pn = p + du
                    md = -1
                elif am < 1.0:
                    pn = b1
                    if md != 0:
                        ev = 2
                        ev_time = u_seg + sstar
                    md = 0
                else:
                    pn = b0 + m * sstar - (du - sstar)
                    ev = 0
                    ev_time = u_seg + sstar
                    md = 1
            else:
                if am <= 1.0:
                    pn = b1
                    md = 0
                elif m > 1.0:
                    pn = b0 + du
                    ev = 3
                    md = -1
                else:
                    pn = b0 - du
                    ev = 3
                    md = 1
            delta = pn - p
            if delta < 0.0:
                delta = -delta
            excess = delta - du
            if excess > acc[ACC_LIP]:
                acc[ACC_LIP] = excess
            if ev_cap > 0 and ev >= 0 and nev < ev_cap:
                ev_u[nev] = ev_time
                ev_idx[nev] = j
                ev_kind[nev] = ev
                nev += 1
            mode[j] = md
            psi[j] = pn
        # exact ordering check (ties allowed)
        prev = psi[0]
        for j in range(1, nlines):
            deficit = prev - psi[j]
            if deficit > acc[ACC_MONO]:
                acc[ACC_MONO] = deficit
            prev = psi[j]
        # invert the driver value in the tracked table
        if b1 < psi[0] or b1 > psi[nlines - 1]:
            status = RANGE
            steps_done = k + 1
            break
        while idx < nlines - 2 and psi[idx + 1] < b1:
            idx += 1
        while idx > 0 and psi[idx] > b1:
            idx -= 1
        gap = psi[idx + 1] - psi[idx]
        if gap > 0.0:
            w = (b1 - psi[idx]) / gap
        else:
            w = 0.5
        xi = y[idx] + w * (y[idx + 1] - y[idx])
        jm = idx - 1 if idx > 0 else idx
        sl_lo = (psi[idx + 1] - psi[jm]) / (y[idx + 1] - y[jm])
        jp = idx + 2 if idx + 2 < nlines else idx + 1
        sl_hi = (psi[jp] - psi[idx]) / (y[jp] - y[idx])
        lam_lo = 0.5 * (1.0 - sl_lo)
        lam_hi = 0.5 * (1.0 - sl_hi)
        if lam_lo < 0.0:
            lam_lo = 0.0
        if lam_hi < 0.0:
            lam_hi = 0.0
        lam = (1.0 - w) * lam_lo + w * lam_hi
        if lam > 0.5:
            lam = 0.5
        one_m = 1.0 - 2.0 * lam
        if one_m < sing_floor:
            status = SINGULAR
            steps_done = k + 1
            break
        f = _lut_eval(lut_lo, lut_step, lut_f, xi) * one_m ** -1.5
        g = one_m ** -2.0
        acc[ACC_T] += du * 0.5 * (f + acc[ACC_F])
        acc[ACC_QVP] += du * 0.5 * (g + acc[ACC_G])
        acc[ACC_F] = f
        acc[ACC_G] = g
        dxi = xi - acc[ACC_XI]
        acc[ACC_QV] += dxi * dxi
        acc[ACC_XI] = xi
        acc[ACC_IDX] = idx
        if record:
            xi_out[k] = xi
            lam_out[k] = lam
            t_out[k] = acc[ACC_T]
        while ichk < nchk and chk_steps[ichk] == s_abs + 1:
            for j in range(nlines):
                chk_psi[ichk, j] = psi[j]
            ichk += 1
        steps_done = k + 1
        if xi >= y2_hit:
            status = RACE_UP
            break
        if xi <= y1_hit:
            status = RACE_DOWN
            break
        if acc[ACC_T] >= t_target:
            status = TARGET
            break
    return status, steps_done, nev, ichk


@njit(cache=True, nogil=True)
def _race_tiebreak(rg, h, B0, B1, u0, y1, y2):
    for _depth in range(60):
        if h < 1e-14:
            break
        bm = 0.5 * (B0 + B1) + np.sqrt(h * 0.25) * rg.standard_normal()
        hm = 0.5 * h
        um = u0 + hm
        d0 = y2 - (B0 + u0)
        dm = y2 - (bm + um)
        e0 = (B0 - u0) - y1
        em = (bm - um) - y1
        upl = dm <= 0.0 or (d0 * dm < 20.0 * hm and rg.random() < np.exp(-2.0 * d0 * dm / hm))
        dnl = em <= 0.0 or (e0 * em < 20.0 * hm and rg.random() < np.exp(-2.0 * e0 * em / hm))
        if upl and dnl:
            B1 = bm
            h = hm
            continue
        if upl:
            return 1
        if dnl:
            return -1
        u1 = u0 + h
        d1 = y2 - (B1 + u1)
        e1 = (B1 - u1) - y1
        upr = d1 <= 0.0 or (dm * d1 < 20.0 * hm and rg.random() < np.exp(-2.0 * dm * d1 / hm))
        dnr = e1 <= 0.0 or (em * e1 < 20.0 * hm and rg.random() < np.exp(-2.0 * em * e1 / hm))
        if upr and dnr:
            B0 = bm
            u0 = um
            h = hm
            continue
        if upr:
            return 1
        if dnr:
            return -1
        break
    d0 = y2 - (B0 + u0)
    d1 = y2 - (B1 + u0 + h)
    e0 = (B0 - u0) - y1
    e1 = (B1 - u0 - h) - y1
    tu = d0 / (d0 - d1) if d1 < d0 else 2.0
    td = e0 / (e0 - e1) if e1 < e0 else 2.0
    return 1 if tu <= td else -1


@njit(cache=True, nogil=True)
def race_chunk(rg, nreps, h, y1, y2):
    """Drifted-Brownian race: +1 counts wins of B+u reaching y2 before B-u reaches y1.

    Crossings inside a step are detected with the exact Brownian-bridge
    crossing probability for a linear boundary; joint crossings in one step
    are resolved by bridge refinement.
    """
    u_cap = (y2 - y1) / 2.0 + 4.0 * h
    sq = np.sqrt(h)
    wins = 0
    for _rep in range(nreps):
        u = 0.0
        B = 0.0
        outcome = 0
        while outcome == 0:
            nb = B + sq * rg.standard_normal()
            un = u + h
            d0 = y2 - (B + u)
            d1 = y2 - (nb + un)
            e0 = (B - u) - y1
            e1 = (nb - un) - y1
            up = d1 <= 0.0
            dn = e1 <= 0.0
            if not up and d0 * d1 < 20.0 * h:
                if rg.random() < np.exp(-2.0 * d0 * d1 / h):
                    up = True
            if not dn and e0 * e1 < 20.0 * h:
                if rg.random() < np.exp(-2.0 * e0 * e1 / h):
                    dn = True
            if up and dn:
                outcome = _race_tiebreak(rg, h, B, nb, u, y1, y2)
            elif up:
                outcome = 1
            elif dn:
                outcome = -1
            else:
                B = nb
                u = un
                if u >= u_cap:
                    outcome = 1 if (y2 - (B + u)) <= ((B - u) - y1) else -1
        if outcome == 1:
            wins += 1
    return wins
