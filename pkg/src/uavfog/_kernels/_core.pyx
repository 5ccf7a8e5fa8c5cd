# cython: boundscheck=False, wraparound=False, cdivision=True
"""Compiled kernels: ant path construction and closed-loop flight.

Operation-for-operation mirror of ``pyref.py`` (same arithmetic, same
order, same libm calls) so both backends produce bit-identical results.
"""

import numpy as np

cimport numpy as cnp
from libc.math cimport atan2, asin, cos, fabs, hypot, pow, sin, sqrt

BACKEND = "cython"

COMPLETE = 0
STUCK = 1
BUDGET = 2

DONE = 0
TIMEOUT = 1
UNSTABLE = 2


cdef int _pick_target(double[:, ::1] eta, signed char[::1] hit_flags,
                      int n_t, int cell) nogil:
    cdef int best_t = -1
    cdef double best_eta = -1.0
    cdef double e
    cdef int t
    for t in range(n_t):
        if hit_flags[t] < 0:
            e = eta[t, cell]
            if e > best_eta:
                best_eta = e
                best_t = t
    return best_t


def construct_path(int start, int[::1] targets, int[:, ::1] nbr,
                   cnp.uint8_t[::1] feasible, double[:, ::1] sigma,
                   double[:, ::1] eta, double[:, ::1] kappa,
                   double alpha, double beta, int mode, int backtrack_cells,
                   int early_stage, int quiet_limit, int cycle_window,
                   double[::1] uniforms, int[::1] path_out, int[::1] dirs_out):
    """See ``pyref.construct_path``; identical contract and semantics."""
    cdef int n_cells = nbr.shape[0]
    cdef int n_dirs = nbr.shape[1]
    cdef int n_t = targets.shape[0]
    cdef int max_path = path_out.shape[0]
    cdef int n_draws = uniforms.shape[0]

    visited_arr = np.zeros(n_cells, dtype=np.uint8)
    tabu_arr = np.zeros(n_cells * n_dirs, dtype=np.uint8)
    hit_arr = np.full(n_t, -1, dtype=np.int32)
    cdef cnp.uint8_t[::1] visited = visited_arr
    cdef cnp.uint8_t[::1] tabu = tabu_arr
    cdef int[::1] tgt_hit = hit_arr
    cdef signed char[::1] hit_flags = np.full(n_t, -1, dtype=np.int8)

    cdef double weights[26]
    cdef int history[64]
    cdef int hist_cap = cycle_window if cycle_window < 64 else 64
    cdef int hist_len = 0

    cdef int remaining = n_t
    cdef int path_len = 1
    cdef int draws = 0
    cdef int n_backtracks = 0
    cdef int n_restarts = 0
    cdef int quiet = 0
    cdef long work = 0
    cdef long work_limit = 8 * <long> n_draws

    cdef int cur, tgt, d, v, t, chosen, nxt, i, base, new_len
    cdef double total, w, r, acc, k_prev, k_now
    cdef bint cycled, trigger, hit_target

    path_out[0] = start
    dirs_out[0] = -1
    visited[start] = 1
    for t in range(n_t):
        if targets[t] == start:
            tgt_hit[t] = 0
            hit_flags[t] = 0
            remaining -= 1
    if remaining == 0:
        return COMPLETE, 1, 0, 0, 0

    cur = start
    tgt = _pick_target(eta, hit_flags, n_t, cur)

    while True:
        work += 1
        if work > work_limit:
            return BUDGET, path_len, draws, n_backtracks, n_restarts

        total = 0.0
        base = cur * n_dirs
        for d in range(n_dirs):
            w = 0.0
            v = nbr[cur, d]
            if v >= 0 and feasible[v] and visited[v] == 0 and tabu[base + d] == 0:
                w = pow(sigma[cur, d], alpha) * pow(eta[tgt, v], beta)
            weights[d] = w
            total += w

        if total <= 0.0:
            if mode == 0:
                return STUCK, path_len, draws, n_backtracks, n_restarts
            if path_len <= 1:
                return STUCK, path_len, draws, n_backtracks, n_restarts
            n_backtracks += 1
            if path_len - 1 <= backtrack_cells:
                for i in range(1, path_len):
                    visited[path_out[i]] = 0
                for t in range(n_t):
                    if tgt_hit[t] > 0:
                        tgt_hit[t] = -1
                        hit_flags[t] = -1
                path_len = 1
                n_restarts += 1
            else:
                new_len = path_len - backtrack_cells
                tabu[path_out[new_len - 1] * n_dirs + dirs_out[new_len]] = 1
                for i in range(new_len, path_len):
                    visited[path_out[i]] = 0
                for t in range(n_t):
                    if tgt_hit[t] >= new_len:
                        tgt_hit[t] = -1
                        hit_flags[t] = -1
                path_len = new_len
            cur = path_out[path_len - 1]
            tgt = _pick_target(eta, hit_flags, n_t, cur)
            quiet = 0
            hist_len = 0
            remaining = 0
            for t in range(n_t):
                if tgt_hit[t] < 0:
                    remaining += 1
            continue

        if draws >= n_draws or path_len >= max_path:
            return BUDGET, path_len, draws, n_backtracks, n_restarts
        r = uniforms[draws] * total
        draws += 1
        acc = 0.0
        chosen = -1
        for d in range(n_dirs):
            w = weights[d]
            if w > 0.0:
                acc += w
                chosen = d
                if r < acc:
                    break
        nxt = nbr[cur, chosen]

        cycled = False
        if mode >= 1:
            for i in range(hist_len):
                if history[i] == nxt:
                    cycled = True
                    break

        path_out[path_len] = nxt
        dirs_out[path_len] = chosen
        path_len += 1
        visited[nxt] = 1
        quiet += 1
        if hist_cap > 0:
            if hist_len < hist_cap:
                history[hist_len] = nxt
                hist_len += 1
            else:
                for i in range(hist_cap - 1):
                    history[i] = history[i + 1]
                history[hist_cap - 1] = nxt

        hit_target = False
        for t in range(n_t):
            if tgt_hit[t] < 0 and targets[t] == nxt:
                tgt_hit[t] = path_len - 1
                hit_flags[t] = 0
                remaining -= 1
                hit_target = True
        if remaining == 0:
            return COMPLETE, path_len, draws, n_backtracks, n_restarts
        if hit_target:
            tgt = _pick_target(eta, hit_flags, n_t, nxt)

        trigger = False
        if mode >= 1:
            if cycled:
                trigger = True
            elif mode == 2 and path_len >= 3:
                k_prev = kappa[path_out[path_len - 3],
                               dirs_out[path_len - 2]]
                k_now = kappa[path_out[path_len - 2], chosen]
                if k_now < 0.5 * k_prev:
                    trigger = True
            if not trigger and early_stage and quiet > quiet_limit:
                trigger = True

        if trigger:
            n_backtracks += 1
            if path_len - 1 <= backtrack_cells:
                for i in range(1, path_len):
                    visited[path_out[i]] = 0
                for t in range(n_t):
                    if tgt_hit[t] > 0:
                        tgt_hit[t] = -1
                        hit_flags[t] = -1
                path_len = 1
                n_restarts += 1
            else:
                new_len = path_len - backtrack_cells
                tabu[path_out[new_len - 1] * n_dirs + dirs_out[new_len]] = 1
                for i in range(new_len, path_len):
                    visited[path_out[i]] = 0
                for t in range(n_t):
                    if tgt_hit[t] >= new_len:
                        tgt_hit[t] = -1
                        hit_flags[t] = -1
                path_len = new_len
            cur = path_out[path_len - 1]
            tgt = _pick_target(eta, hit_flags, n_t, cur)
            quiet = 0
            hist_len = 0
            remaining = 0
            for t in range(n_t):
                if tgt_hit[t] < 0:
                    remaining += 1
        else:
            cur = nxt


# ----------------------------------------------------------------------
# fuzzy inference

cdef void _mamdani(double e_u, double ec_u, double[::1] table,
                   double *out) nogil:
    cdef double mu_e[7]
    cdef double mu_c[7]
    cdef double c, t, w, we, wsum, acc0, acc1, acc2
    cdef int i, j, k
    if e_u < -6.0:
        e_u = -6.0
    elif e_u > 6.0:
        e_u = 6.0
    if ec_u < -6.0:
        ec_u = -6.0
    elif ec_u > 6.0:
        ec_u = 6.0
    for i in range(7):
        c = -6.0 + 2.0 * i
        t = 1.0 - fabs(e_u - c) / 2.0
        mu_e[i] = t if t > 0.0 else 0.0
        t = 1.0 - fabs(ec_u - c) / 2.0
        mu_c[i] = t if t > 0.0 else 0.0
    wsum = 0.0
    acc0 = 0.0
    acc1 = 0.0
    acc2 = 0.0
    for i in range(7):
        we = mu_e[i]
        if we <= 0.0:
            continue
        for j in range(7):
            w = we if we < mu_c[j] else mu_c[j]
            if w <= 0.0:
                continue
            k = (i * 7 + j) * 3
            wsum += w
            acc0 += w * table[k]
            acc1 += w * table[k + 1]
            acc2 += w * table[k + 2]
    if wsum <= 0.0:
        out[0] = 0.0
        out[1] = 0.0
        out[2] = 0.0
    else:
        out[0] = acc0 / wsum
        out[1] = acc1 / wsum
        out[2] = acc2 / wsum


def mamdani_adjust(double e_u, double ec_u, double[::1] table):
    """See ``pyref.mamdani_adjust``."""
    cdef double out[3]
    _mamdani(e_u, ec_u, table, out)
    return out[0], out[1], out[2]


# ----------------------------------------------------------------------
# closed-loop flight

cdef void _deriv(double *s, double u1, double u2, double u3, double u4,
                 double mass, double gravity, double arm,
                 double ix, double iy, double iz, double *out) nogil:
    cdef double sph = sin(s[6])
    cdef double cph = cos(s[6])
    cdef double sth = sin(s[7])
    cdef double cth = cos(s[7])
    cdef double sps = sin(s[8])
    cdef double cps = cos(s[8])
    out[0] = s[3]
    out[1] = s[4]
    out[2] = s[5]
    out[3] = u1 / mass * (sph * sps + cph * sth * cps)
    out[4] = u1 / mass * (-sph * sps + cph * sth * sps)
    out[5] = u1 / mass * (cph * cth) - gravity
    out[6] = s[9]
    out[7] = s[10]
    out[8] = s[11]
    out[9] = (arm * u2 - s[10] * s[11] * (iz - iy)) / ix
    out[10] = (arm * u3 - s[9] * s[11] * (ix - iz)) / iy
    out[11] = (u4 - s[9] * s[10] * (iy - ix)) / iz


def simulate_path(double[::1] state0, double[:, ::1] wpts,
                  double[::1] params, double[::1] fuzzy_table, int fuzzy,
                  int max_ticks, double[:, ::1] omega_trace,
                  double[:, ::1] pos_trace, double[:, ::1] att_trace,
                  int[::1] wpt_ticks):
    """See ``pyref.simulate_path``; identical contract and semantics."""
    cdef double mass = params[0]
    cdef double gravity = params[1]
    cdef double arm = params[2]
    cdef double ix = params[3]
    cdef double iy = params[4]
    cdef double iz = params[5]
    cdef double c_t = params[6]
    cdef double c_m = params[7]
    cdef double v_m = params[8]
    cdef double r_m = params[9]
    cdef double p_m = params[10]
    cdef double dt_tick = params[11]
    cdef int n_sub = <int> params[12]
    cdef double capture_r = params[13]
    cdef double final_r = params[14]
    cdef double v_cruise = params[15]
    cdef double a_max = params[16]
    cdef double v_max = params[17]
    cdef double z_ceiling = params[18]
    cdef double zkp = params[19]
    cdef double zki = params[20]
    cdef double zkd = params[21]
    cdef double akp = params[22]
    cdef double aki = params[23]
    cdef double akd = params[24]
    cdef double ykp = params[25]
    cdef double yki = params[26]
    cdef double ykd = params[27]
    cdef double vel_kp = params[28]
    cdef double e_scale = params[29]
    cdef double ec_scale = params[30]
    cdef double omega_cap = params[31]
    cdef double u1_max = params[32]
    cdef double sin_theta_max = params[33]
    cdef double az_max = params[34]
    cdef double brake_accel = params[35]
    cdef double psi_hold_r = params[36]
    cdef double acc_z_cap = params[37]
    cdef double acc_att_cap = params[38]
    cdef double acc_psi_cap = params[39]

    cdef int n_wpts = wpt_ticks.shape[0]
    cdef double s[12]
    cdef double k1[12]
    cdef double k2[12]
    cdef double k3[12]
    cdef double k4[12]
    cdef double stmp[12]
    cdef double fout[3]
    cdef int i
    for i in range(12):
        s[i] = state0[i]

    cdef int k = 0
    cdef int tick = 0
    cdef double energy = 0.0
    cdef double acc_z = 0.0
    cdef double acc_th = 0.0
    cdef double acc_ph = 0.0
    cdef double acc_ps = 0.0
    cdef double prev_ez = 0.0
    cdef double prev_eth = 0.0
    cdef double prev_eph = 0.0
    cdef double prev_eps = 0.0
    cdef bint first = True
    cdef double psi_d = s[8]
    cdef double h = dt_tick / n_sub

    cdef double dx, dy, dz, dxy, dist3, radius, e_ps, ec
    cdef double ykp_t, yki_t, ykd_t, d_ps, u_ps, u4, e_z, d_z, az, tilt, u1
    cdef double margin, v_allow, v_des, v_along, a_along, align, a_eff
    cdef double s_th, theta_d, e_th, d_th, u_th, u3, e_ph, d_ph, u_ph, u2
    cdef double q1, q2, q3, q4, cap, w1, w2, w3, w4, o1, o2, o3, o4
    cdef double u1e, u2e, u3e, u4e, speed
    cdef int sub

    while True:
        while k < n_wpts:
            dx = wpts[k, 0] - s[0]
            dy = wpts[k, 1] - s[1]
            dz = wpts[k, 2] - s[2]
            radius = final_r if k == n_wpts - 1 else capture_r
            if sqrt(dx * dx + dy * dy + dz * dz) < radius:
                wpt_ticks[k] = tick
                k += 1
                first = True
                acc_ps = 0.0
            else:
                break
        if k == n_wpts:
            return DONE, tick, energy
        if tick >= max_ticks:
            return TIMEOUT, tick, energy

        dx = wpts[k, 0] - s[0]
        dy = wpts[k, 1] - s[1]
        dz = wpts[k, 2] - s[2]
        dxy = hypot(dx, dy)
        dist3 = sqrt(dx * dx + dy * dy + dz * dz)

        if dxy > psi_hold_r:
            psi_d = atan2(dy, dx)
        e_ps = atan2(sin(psi_d - s[8]), cos(psi_d - s[8]))

        ykp_t = ykp
        yki_t = yki
        ykd_t = ykd
        if fuzzy:
            ec = 0.0 if first else (e_ps - prev_eps) / dt_tick
            _mamdani(-e_ps * e_scale, -ec * ec_scale, fuzzy_table, fout)
            ykp_t = ykp + fout[0]
            yki_t = yki + fout[1]
            ykd_t = ykd + fout[2]

        acc_ps += e_ps * dt_tick
        if acc_ps > acc_psi_cap:
            acc_ps = acc_psi_cap
        elif acc_ps < -acc_psi_cap:
            acc_ps = -acc_psi_cap
        d_ps = 0.0 if first else (e_ps - prev_eps) / dt_tick
        u_ps = ykp_t * e_ps + yki_t * acc_ps + ykd_t * d_ps
        u4 = iz * u_ps + s[9] * s[10] * (iy - ix)

        e_z = dz
        acc_z += e_z * dt_tick
        if acc_z > acc_z_cap:
            acc_z = acc_z_cap
        elif acc_z < -acc_z_cap:
            acc_z = -acc_z_cap
        d_z = 0.0 if first else (e_z - prev_ez) / dt_tick
        az = zkp * e_z + zki * acc_z + zkd * d_z
        if az > az_max:
            az = az_max
        elif az < -az_max:
            az = -az_max
        tilt = cos(s[6]) * cos(s[7])
        if tilt < 0.5:
            tilt = 0.5
        u1 = mass * (gravity + az) / tilt
        if u1 < 0.0:
            u1 = 0.0
        elif u1 > u1_max:
            u1 = u1_max

        if k == n_wpts - 1:
            margin = dist3 - 0.5 * final_r
            if margin < 0.0:
                margin = 0.0
            v_allow = sqrt(2.0 * brake_accel * margin)
            v_des = v_allow if v_allow < v_cruise else v_cruise
        else:
            v_des = v_cruise
        if dist3 > 1e-9:
            v_des *= dxy / dist3
        v_along = s[3] * cos(s[8]) + s[4] * sin(s[8])
        a_along = vel_kp * (v_des - v_along)
        if a_along > a_max:
            a_along = a_max
        elif a_along < -a_max:
            a_along = -a_max
        align = cos(e_ps)
        if align < 0.0:
            align = 0.0
        a_eff = a_along * align
        s_th = mass * a_eff / (u1 if u1 > 1e-6 else 1e-6)
        if s_th > sin_theta_max:
            s_th = sin_theta_max
        elif s_th < -sin_theta_max:
            s_th = -sin_theta_max
        theta_d = asin(s_th)

        e_th = theta_d - s[7]
        acc_th += e_th * dt_tick
        if acc_th > acc_att_cap:
            acc_th = acc_att_cap
        elif acc_th < -acc_att_cap:
            acc_th = -acc_att_cap
        d_th = 0.0 if first else (e_th - prev_eth) / dt_tick
        u_th = akp * e_th + aki * acc_th + akd * d_th
        u3 = (iy * u_th + s[9] * s[11] * (ix - iz)) / arm

        e_ph = -s[6]
        acc_ph += e_ph * dt_tick
        if acc_ph > acc_att_cap:
            acc_ph = acc_att_cap
        elif acc_ph < -acc_att_cap:
            acc_ph = -acc_att_cap
        d_ph = 0.0 if first else (e_ph - prev_eph) / dt_tick
        u_ph = akp * e_ph + aki * acc_ph + akd * d_ph
        u2 = (ix * u_ph + s[10] * s[11] * (iz - iy)) / arm

        q1 = u1 / (4.0 * c_t)
        q3 = u3 / (2.0 * c_t)
        q2 = u2 / (2.0 * c_t)
        q4 = u4 / (4.0 * c_m)
        cap = omega_cap * omega_cap
        w1 = q1 - q3 - q4
        w2 = q1 - q2 + q4
        w3 = q1 + q3 - q4
        w4 = q1 + q2 + q4
        if w1 < 0.0:
            w1 = 0.0
        elif w1 > cap:
            w1 = cap
        if w2 < 0.0:
            w2 = 0.0
        elif w2 > cap:
            w2 = cap
        if w3 < 0.0:
            w3 = 0.0
        elif w3 > cap:
            w3 = cap
        if w4 < 0.0:
            w4 = 0.0
        elif w4 > cap:
            w4 = cap
        o1 = sqrt(w1)
        o2 = sqrt(w2)
        o3 = sqrt(w3)
        o4 = sqrt(w4)
        u1e = c_t * (w1 + w2 + w3 + w4)
        u2e = c_t * (-w2 + w4)
        u3e = c_t * (-w1 + w3)
        u4e = c_m * (-w1 + w2 - w3 + w4)

        for sub in range(n_sub):
            _deriv(s, u1e, u2e, u3e, u4e, mass, gravity, arm, ix, iy, iz, k1)
            for i in range(12):
                stmp[i] = s[i] + 0.5 * h * k1[i]
            _deriv(stmp, u1e, u2e, u3e, u4e, mass, gravity, arm, ix, iy, iz, k2)
            for i in range(12):
                stmp[i] = s[i] + 0.5 * h * k2[i]
            _deriv(stmp, u1e, u2e, u3e, u4e, mass, gravity, arm, ix, iy, iz, k3)
            for i in range(12):
                stmp[i] = s[i] + h * k3[i]
            _deriv(stmp, u1e, u2e, u3e, u4e, mass, gravity, arm, ix, iy, iz, k4)
            for i in range(12):
                s[i] = s[i] + h / 6.0 * (k1[i] + 2.0 * k2[i] + 2.0 * k3[i] + k4[i])

        energy += ((v_m - o1 * p_m) + (v_m - o2 * p_m) + (v_m - o3 * p_m)
                   + (v_m - o4 * p_m)) / r_m * dt_tick
        omega_trace[tick, 0] = o1
        omega_trace[tick, 1] = o2
        omega_trace[tick, 2] = o3
        omega_trace[tick, 3] = o4
        pos_trace[tick, 0] = s[0]
        pos_trace[tick, 1] = s[1]
        pos_trace[tick, 2] = s[2]
        att_trace[tick, 0] = s[6]
        att_trace[tick, 1] = s[7]
        att_trace[tick, 2] = s[8]
        tick += 1

        prev_ez = e_z
        prev_eth = e_th
        prev_eph = e_ph
        prev_eps = e_ps
        first = False

        if fabs(s[6]) >= 1.55 or fabs(s[7]) >= 1.55:
            return UNSTABLE, tick, energy
        if s[2] < -1.0 or s[2] > z_ceiling + 50.0:
            return UNSTABLE, tick, energy
        speed = sqrt(s[3] * s[3] + s[4] * s[4] + s[5] * s[5])
        if speed > 1.2 * v_max:
            return UNSTABLE, tick, energy
