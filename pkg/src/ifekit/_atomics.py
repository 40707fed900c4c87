"""CPU atomics for jit kernels, emitted as LLVM instructions.

numba has no public CPU atomic API, so these intrinsics lower directly to
atomicrmw/cmpxchg.  Monotonic ordering suffices for the frontier and lane
words (the iteration boundary provides the inter-iteration happens-before
edge); the head swing uses acq_rel so a published record's words are
visible to whoever reads the new head.

This module imports cleanly without numba; HAVE_NUMBA gates the jit path.
"""

from __future__ import annotations

try:
    from llvmlite import ir
    from numba import types
    from numba.extending import intrinsic

    HAVE_NUMBA = True
except ImportError:  # pragma: no cover - exercised via the numpy backend
    HAVE_NUMBA = False

if HAVE_NUMBA:

    def _rmw_codegen(op, ordering="monotonic"):
        def codegen(context, builder, signature, args):
            arr_v, idx_v, val_v = args
            ary = context.make_array(signature.args[0])(context, builder, arr_v)
            ptr = builder.gep(ary.data, [idx_v])
            return builder.atomic_rmw(op, ptr, val_v, ordering)

        return codegen

    @intrinsic
    def atomic_xchg_u8(typingctx, arr, idx, val):
        """old = arr[idx]; arr[idx] = val; return old  (atomic)."""
        sig = types.uint8(types.uint8[::1], types.int64, types.uint8)
        return sig, _rmw_codegen("xchg")

    @intrinsic
    def atomic_or_u64(typingctx, arr, idx, val):
        """old = arr[idx]; arr[idx] |= val; return old  (atomic)."""
        sig = types.uint64(types.uint64[::1], types.int64, types.uint64)
        return sig, _rmw_codegen("or")

    @intrinsic
    def atomic_cas_i64(typingctx, arr, idx, expected, desired):
        """Compare-and-swap; returns the observed prior value."""
        sig = types.int64(types.int64[::1], types.int64, types.int64, types.int64)

        def codegen(context, builder, signature, args):
            arr_v, idx_v, exp_v, des_v = args
            ary = context.make_array(signature.args[0])(context, builder, arr_v)
            ptr = builder.gep(ary.data, [idx_v])
            pair = builder.cmpxchg(ptr, exp_v, des_v, "acq_rel", "monotonic")
            return builder.extract_value(pair, 0)

        return sig, codegen

    @intrinsic
    def ctz64(typingctx, word):
        """Index of the lowest set bit (find-first-set); word must be nonzero."""
        sig = types.int64(types.uint64)

        def codegen(context, builder, signature, args):
            (w,) = args
            i64 = ir.IntType(64)
            fnty = ir.FunctionType(i64, [i64, ir.IntType(1)])
            fn = builder.module.declare_intrinsic("llvm.cttz", [i64], fnty)
            return builder.call(fn, [w, ir.Constant(ir.IntType(1), 0)])

        return sig, codegen
