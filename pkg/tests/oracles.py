"""Slow, independent reference implementations used as test oracles."""

M32 = 0xFFFFFFFF


def ripple_carry_chain(a: int, b: int, width: int = 32) -> int:
    """Longest carry run, by simulating a ripple-carry adder bit by bit.

    A carry generated at bit i travels up through every propagating bit; the
    chain length is the number of bit positions the carry is alive in.
    """
    carry, origin, best = 0, None, 0
    for i in range(width):
        ai, bi = (a >> i) & 1, (b >> i) & 1
        if ai and bi:
            carry, origin = 1, i
        elif ai ^ bi:
            pass                    # carry-in (if any) propagates
        else:
            carry, origin = 0, None
        if carry:
            best = max(best, i - origin + 1)
    return best


def ripple_sum(a: int, b: int, width: int = 32) -> int:
    out, c = 0, 0
    for i in range(width):
        ai, bi = (a >> i) & 1, (b >> i) & 1
        out |= (ai ^ bi ^ c) << i
        c = (ai & bi) | (c & (ai ^ bi))
    return out


_ADD = {"ADD", "ADDI", "LW", "SW"}
_SUB = {"SUB", "SLT", "BEQ", "BNE"}
_LOGIC = {"AND", "OR", "XOR", "NOR"}
_SHIFT = {"SLL", "SRL", "SRA"}


def oracle_delay(op: str, a: int, b: int, a_prev: int, b_prev: int,
                 t_wc=4.0, add_base=0.4, add_slope=0.1125, mul_base=0.4, mul_slope=3.6 / 62,
                 logic=0.4, sh_base=0.4, sh_slope=0.06, hist_w=0.3) -> float:
    if op in _ADD:
        raw = add_base + add_slope * ripple_carry_chain(a, b)
    elif op in _SUB:
        raw = add_base + add_slope * ripple_carry_chain(a, (-b) & M32)
    elif op == "MUL":
        raw = mul_base + mul_slope * (a.bit_length() + b.bit_length())
    elif op in _LOGIC:
        raw = logic
    elif op in _SHIFT:
        raw = sh_base + sh_slope * bin(b % 32).count("1")
    else:
        raise ValueError(op)
    toggles = bin(a ^ a_prev).count("1") + bin(b ^ b_prev).count("1")
    return min(raw + hist_w * toggles / 64, t_wc)


def hand_f1_weighted(y_true, y_pred, n_classes):
    """Weighted F1 straight from the definition, using plain Python."""
    n = len(y_true)
    total = 0.0
    for k in range(n_classes):
        tp = sum(1 for t, p in zip(y_true, y_pred) if t == k and p == k)
        fp = sum(1 for t, p in zip(y_true, y_pred) if t != k and p == k)
        fn = sum(1 for t, p in zip(y_true, y_pred) if t == k and p != k)
        prec = tp / (tp + fp) if tp + fp else 0.0
        rec = tp / (tp + fn) if tp + fn else 0.0
        f1 = 2 * prec * rec / (prec + rec) if prec + rec else 0.0
        total += f1 * (tp + fn)
    return total / n
