"""Pure-Python kernels: ant path construction and closed-loop flight.

Reference implementations of the two hot loops. The compiled extension in
``_core.pyx`` mirrors this module operation-for-operation (same arithmetic,
same order, same libm calls) so both backends produce bit-identical
results; ``tests/test_backends.py`` enforces the parity.
"""

from __future__ import annotations

import math

BACKEND = "python"

# construct_path status codes
COMPLETE = 0
STUCK = 1
BUDGET = 2

# simulate_path status codes
DONE = 0
TIMEOUT = 1
UNSTABLE = 2


# ----------------------------------------------------------------------
# ant path construction

def construct_path(start, targets, nbr, feasible, sigma, eta, kappa,
                   alpha, beta, mode, backtrack_cells, early_stage,
                   quiet_limit, cycle_window, uniforms, path_out, dirs_out):
    """Walk one ant from ``start`` until every target cell is visited.

    mode: 0 = classical (deadlock kills the ant), 1 = decoupling,
    2 = decoupling + safety values (kappa-drop rule active).
    Selection draws come exclusively from ``uniforms``; exhausting the
    buffer is the construction budget. Returns
    (status, path_len, draws_used, n_backtracks, n_restarts).
    """
    n_cells, n_dirs = nbr.shape
    n_t = len(targets)
    max_path = len(path_out)
    nbr_f = nbr.ravel()
    sig_f = sigma.ravel()
    kap_f = kappa.ravel()
    eta_f = eta.ravel()
    feas = feasible
    visited = bytearray(n_cells)
    tabu = set()
    weights = [0.0] * n_dirs

    tgt_hit = [-1] * n_t          # path position of first visit, -1 unset
    remaining = n_t
    path_out[0] = start
    dirs_out[0] = -1
    path_len = 1
    visited[start] = 1
    for t in range(n_t):
        if targets[t] == start:
            tgt_hit[t] = 0
            remaining -= 1
    if remaining == 0:
        return COMPLETE, 1, 0, 0, 0

    def pick_target(cell):
        best_t = -1
        best_eta = -1.0
        for t in range(n_t):
            if tgt_hit[t] < 0:
                e = eta_f[t * n_cells + cell]
                if e > best_eta:
                    best_eta = e
                    best_t = t
        return best_t

    cur = start
    tgt = pick_target(cur)
    draws = 0
    n_draws = len(uniforms)
    n_backtracks = 0
    n_restarts = 0
    quiet = 0
    history = [0] * max(cycle_window, 1)
    hist_len = 0
    work = 0
    work_limit = 8 * n_draws

    while True:
        work += 1
        if work > work_limit:
            return BUDGET, path_len, draws, n_backtracks, n_restarts

        # feasible, unvisited, non-tabu candidates
        total = 0.0
        base = cur * n_dirs
        for d in range(n_dirs):
            w = 0.0
            v = nbr_f[base + d]
            if v >= 0 and feas[v] and not visited[v] and (base + d) not in tabu:
                w = math.pow(sig_f[base + d], alpha) * \
                    math.pow(eta_f[tgt * n_cells + v], beta)
            weights[d] = w
            total += w

        if total <= 0.0:
            # deadlock: no viable next waypoint
            if mode == 0:
                return STUCK, path_len, draws, n_backtracks, n_restarts
            if path_len <= 1:
                return STUCK, path_len, draws, n_backtracks, n_restarts
            path_len, cur, tgt, quiet, hist_len, n_backtracks, n_restarts = \
                _backtrack(path_out, dirs_out, path_len, visited, tabu,
                           tgt_hit, backtrack_cells, n_dirs, start,
                           n_backtracks, n_restarts, eta_f, n_cells, n_t,
                           targets, pick_target)
            remaining = sum(1 for t in range(n_t) if tgt_hit[t] < 0)
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
        nxt = nbr_f[base + chosen]

        # rule 1 precheck: moving onto a recently-left waypoint is a cycle
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
        if cycle_window > 0:
            if hist_len < cycle_window:
                history[hist_len] = nxt
                hist_len += 1
            else:
                for i in range(cycle_window - 1):
                    history[i] = history[i + 1]
                history[cycle_window - 1] = nxt

        hit_target = False
        for t in range(n_t):
            if tgt_hit[t] < 0 and targets[t] == nxt:
                tgt_hit[t] = path_len - 1
                remaining -= 1
                hit_target = True
        if remaining == 0:
            return COMPLETE, path_len, draws, n_backtracks, n_restarts
        if hit_target:
            tgt = pick_target(nxt)

        trigger = False
        if mode >= 1:
            if cycled:
                trigger = True
            elif mode == 2 and path_len >= 3:
                prev_base = path_out[path_len - 3] * n_dirs
                k_prev = kap_f[prev_base + dirs_out[path_len - 2]]
                k_now = kap_f[path_out[path_len - 2] * n_dirs + chosen]
                if k_now < 0.5 * k_prev:
                    trigger = True
            if not trigger and early_stage and quiet > quiet_limit:
                trigger = True

        if trigger:
            path_len, cur, tgt, quiet, hist_len, n_backtracks, n_restarts = \
                _backtrack(path_out, dirs_out, path_len, visited, tabu,
                           tgt_hit, backtrack_cells, n_dirs, start,
                           n_backtracks, n_restarts, eta_f, n_cells, n_t,
                           targets, pick_target)
            remaining = sum(1 for t in range(n_t) if tgt_hit[t] < 0)
        else:
            cur = nxt


def _backtrack(path_out, dirs_out, path_len, visited, tabu, tgt_hit,
               depth, n_dirs, start, n_backtracks, n_restarts,
               eta_f, n_cells, n_t, targets, pick_target):
    n_backtracks += 1
    if path_len - 1 <= depth:
        # rewinding past the origin: restart from scratch, keep tabu
        for i in range(1, path_len):
            visited[path_out[i]] = 0
        for t in range(n_t):
            if tgt_hit[t] > 0:
                tgt_hit[t] = -1
        path_len = 1
        n_restarts += 1
    else:
        new_len = path_len - depth
        # the first rewound edge is abandoned for this ant
        tabu.add(path_out[new_len - 1] * n_dirs + dirs_out[new_len])
        for i in range(new_len, path_len):
            visited[path_out[i]] = 0
        for t in range(n_t):
            if tgt_hit[t] >= new_len:
                tgt_hit[t] = -1
        path_len = new_len
    cur = path_out[path_len - 1]
    tgt = pick_target(cur)
    return path_len, cur, tgt, 0, 0, n_backtracks, n_restarts


# ----------------------------------------------------------------------
# fuzzy inference (shared by the flight loop)

def mamdani_adjust(e_u, ec_u, table):
    """Min-activation over the 7x7 rule grid, centroid over singletons.

    ``table`` is float64[147] = 7*7*3 in (E-row, EC-col, output) order.
    Inputs are already scaled to the [-6, 6] universe (clamped here).
    Returns (dkp, dki, dkd).
    """
    if e_u < -6.0:
        e_u = -6.0
    elif e_u > 6.0:
        e_u = 6.0
    if ec_u < -6.0:
        ec_u = -6.0
    elif ec_u > 6.0:
        ec_u = 6.0
    mu_e = [0.0] * 7
    mu_c = [0.0] * 7
    for i in range(7):
        c = -6.0 + 2.0 * i
        t = 1.0 - abs(e_u - c) / 2.0
        mu_e[i] = t if t > 0.0 else 0.0
        t = 1.0 - abs(ec_u - c) / 2.0
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
        return 0.0, 0.0, 0.0
    return acc0 / wsum, acc1 / wsum, acc2 / wsum


# ----------------------------------------------------------------------
# closed-loop flight over a waypoint list

def _deriv(s, u1, u2, u3, u4, mass, gravity, arm, ix, iy, iz):
    sph = math.sin(s[6])
    cph = math.cos(s[6])
    sth = math.sin(s[7])
    cth = math.cos(s[7])
    sps = math.sin(s[8])
    cps = math.cos(s[8])
    return (
        s[3], s[4], s[5],
        u1 / mass * (sph * sps + cph * sth * cps),
        u1 / mass * (-sph * sps + cph * sth * sps),
        u1 / mass * (cph * cth) - gravity,
        s[9], s[10], s[11],
        (arm * u2 - s[10] * s[11] * (iz - iy)) / ix,
        (arm * u3 - s[9] * s[11] * (ix - iz)) / iy,
        (u4 - s[9] * s[10] * (iy - ix)) / iz,
    )


def simulate_path(state0, wpts, params, fuzzy_table, fuzzy, max_ticks,
                  omega_trace, pos_trace, att_trace, wpt_ticks):
    """Fly the waypoint sequence under cascaded PID attitude control.

    ``state0`` is the 12-component dynamics state; ``params`` the packed
    parameter vector (see ``_kernels.pack_flight_params``). Per control
    tick the attitude/altitude errors feed PID loops (the yaw loop is
    fuzzy-adjusted when ``fuzzy``), the control quantities are inverted to
    rotor speeds, and the dynamics advance by RK4 substeps. Returns
    (status, n_ticks, energy_joules) and fills the per-tick rotor-speed
    and position traces plus the capture tick of every waypoint.
    """
    (mass, gravity, arm, ix, iy, iz, c_t, c_m, v_m, r_m, p_m, dt_tick,
     n_sub_f, capture_r, final_r, v_cruise, a_max, v_max, z_ceiling,
     zkp, zki, zkd, akp, aki, akd, ykp, yki, ykd, vel_kp,
     e_scale, ec_scale, omega_cap, u1_max, sin_theta_max, az_max,
     brake_accel, psi_hold_r, acc_z_cap, acc_att_cap, acc_psi_cap) = params
    n_sub = int(n_sub_f)
    n_wpts = len(wpt_ticks)

    s = list(state0)
    k = 0
    tick = 0
    energy = 0.0
    acc_z = 0.0
    acc_th = 0.0
    acc_ph = 0.0
    acc_ps = 0.0
    prev_ez = 0.0
    prev_eth = 0.0
    prev_eph = 0.0
    prev_eps = 0.0
    first = True
    psi_d = s[8]
    h = dt_tick / n_sub

    while True:
        # waypoint capture, possibly several per tick
        while k < n_wpts:
            dx = wpts[k, 0] - s[0]
            dy = wpts[k, 1] - s[1]
            dz = wpts[k, 2] - s[2]
            radius = final_r if k == n_wpts - 1 else capture_r
            if math.sqrt(dx * dx + dy * dy + dz * dz) < radius:
                wpt_ticks[k] = tick
                k += 1
                first = True   # reset transient-sensitive loop memory
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
        dxy = math.hypot(dx, dy)
        dist3 = math.sqrt(dx * dx + dy * dy + dz * dz)

        if dxy > psi_hold_r:
            psi_d = math.atan2(dy, dx)
        e_ps = math.atan2(math.sin(psi_d - s[8]), math.cos(psi_d - s[8]))

        ykp_t = ykp
        yki_t = yki
        ykd_t = ykd
        if fuzzy:
            ec = 0.0 if first else (e_ps - prev_eps) / dt_tick
            dkp, dki, dkd = mamdani_adjust(-e_ps * e_scale, -ec * ec_scale,
                                           fuzzy_table)
            ykp_t = ykp + dkp
            yki_t = yki + dki
            ykd_t = ykd + dkd

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
        tilt = math.cos(s[6]) * math.cos(s[7])
        if tilt < 0.5:
            tilt = 0.5
        u1 = mass * (gravity + az) / tilt
        if u1 < 0.0:
            u1 = 0.0
        elif u1 > u1_max:
            u1 = u1_max

        # along-track speed loop -> pitch reference
        if k == n_wpts - 1:
            margin = dist3 - 0.5 * final_r
            if margin < 0.0:
                margin = 0.0
            v_allow = math.sqrt(2.0 * brake_accel * margin)
            v_des = v_allow if v_allow < v_cruise else v_cruise
        else:
            v_des = v_cruise
        if dist3 > 1e-9:
            v_des *= dxy / dist3
        v_along = s[3] * math.cos(s[8]) + s[4] * math.sin(s[8])
        a_along = vel_kp * (v_des - v_along)
        if a_along > a_max:
            a_along = a_max
        elif a_along < -a_max:
            a_along = -a_max
        align = math.cos(e_ps)
        if align < 0.0:
            align = 0.0
        a_eff = a_along * align
        s_th = mass * a_eff / (u1 if u1 > 1e-6 else 1e-6)
        if s_th > sin_theta_max:
            s_th = sin_theta_max
        elif s_th < -sin_theta_max:
            s_th = -sin_theta_max
        theta_d = math.asin(s_th)

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

        # invert the control block, clamp squared speeds, recompute U
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
        o1 = math.sqrt(w1)
        o2 = math.sqrt(w2)
        o3 = math.sqrt(w3)
        o4 = math.sqrt(w4)
        u1e = c_t * (w1 + w2 + w3 + w4)
        u2e = c_t * (-w2 + w4)
        u3e = c_t * (-w1 + w3)
        u4e = c_m * (-w1 + w2 - w3 + w4)

        for _ in range(n_sub):
            k1 = _deriv(s, u1e, u2e, u3e, u4e, mass, gravity, arm, ix, iy, iz)
            s2 = [s[i] + 0.5 * h * k1[i] for i in range(12)]
            k2 = _deriv(s2, u1e, u2e, u3e, u4e, mass, gravity, arm, ix, iy, iz)
            s3 = [s[i] + 0.5 * h * k2[i] for i in range(12)]
            k3 = _deriv(s3, u1e, u2e, u3e, u4e, mass, gravity, arm, ix, iy, iz)
            s4 = [s[i] + h * k3[i] for i in range(12)]
            k4 = _deriv(s4, u1e, u2e, u3e, u4e, mass, gravity, arm, ix, iy, iz)
            s = [s[i] + h / 6.0 * (k1[i] + 2.0 * k2[i] + 2.0 * k3[i] + k4[i])
                 for i in range(12)]

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

        if abs(s[6]) >= 1.55 or abs(s[7]) >= 1.55:
            return UNSTABLE, tick, energy
        if s[2] < -1.0 or s[2] > z_ceiling + 50.0:
            return UNSTABLE, tick, energy
        speed = math.sqrt(s[3] * s[3] + s[4] * s[4] + s[5] * s[5])
        if speed > 1.2 * v_max:
            return UNSTABLE, tick, energy

    # unreachable
