"""Generators for the shipped kernel texts.

The ``.mimw`` files next to this module are produced by these functions
with their default arguments; tests regenerate and compare them. Sized
variants (other tile counts, stage depths, removed waits) come from the
same generators.
"""

from __future__ import annotations


def listing1(block: int = 64, tiles: int = 4, ctas: int = 2, clc_stages: int = 1, cluster: int = 1) -> str:
    """Persistent producer/consumer pipeline fed by cluster launch control.

    The default task stages one block of ``x`` into shared memory per tile;
    a one-warp consumer task computes ``y = 2 * x + cta_rank``. Both tasks
    read every CLC response, so the context has two consumers. With
    ``cluster > 1`` the rank term makes ``y`` depend on which CTA drew each
    tile, so only the single-CTA-cluster form is schedule independent.
    """
    n = block * tiles
    return f"""\
kernel listing1 grid({ctas} 1 1) cluster({cluster} 1 1) warps(4) tiles({tiles})
param x tensor({n})
param y tensor({n})
buffer smem shape({block}) f32 stages(1) storage(smem)
barrier empty count(1) arrive(1)
barrier full count(1) arrive(1)
%clc = clc_create_context stages({clc_stages}) consumers(2)
%rank = cta_rank
%empty0 = local_view @empty 0
%full0 = local_view @full 0
%buf0 = local_view @smem 0
task default {{
  clc_producer %clc
  %tile = clc_consumer %clc
  %phase = const 0
  %go = ne %tile -1
  while %go {{
    %wait_parity = xor %phase 1
    barrier_wait %empty0 %wait_parity
    %off = mul %tile {block}
    %x = load @x %off shape({block})
    local_store %buf0 %x
    barrier_arrive %full0
    %phase = xor %phase 1
    clc_producer %clc
    %tile = clc_consumer %clc
    %go = ne %tile -1
  }}
}}
task warps(1) {{
  %tile = clc_consumer %clc
  %phase = const 0
  %go = ne %tile -1
  while %go {{
    barrier_wait %full0 %phase
    %xl = local_load %buf0
    %y2 = mul %xl 2.0
    %yv = add %y2 %rank
    %off = mul %tile {block}
    store @y %off %yv
    barrier_arrive %empty0
    %phase = xor %phase 1
    %tile = clc_consumer %clc
    %go = ne %tile -1
  }}
}}
"""


def gemm_pipeline(m: int = 64, n: int = 64, k: int = 64, bk: int = 16, stages: int = 2) -> str:
    """Two-role GEMM: a producer task streams K-slices of A and B into a
    staged ring with async copies; a consumer task multiplies them."""
    trips = k // bk
    nbytes = (m * bk + bk * n) * 4
    return f"""\
kernel gemm_pipeline grid(1 1 1) cluster(1 1 1) warps(8)
param a tensor({m} {k})
param b tensor({k} {n})
param c tensor({m} {n})
buffer a_smem shape({m} {bk}) f32 stages({stages}) storage(smem)
buffer b_smem shape({bk} {n}) f32 stages({stages}) storage(smem)
barrier empty count({stages}) arrive(1)
barrier full count({stages}) arrive(1)
task default {{
  for %i = 0 to {trips} {{
    %s = mod %i {stages}
    %round = idiv %i {stages}
    %phase = and %round 1
    %free_parity = xor %phase 1
    %e = local_view @empty %s
    barrier_wait %e %free_parity
    %f = local_view @full %s
    barrier_expect_bytes %f {nbytes}
    %va = local_view @a_smem %s
    %vb = local_view @b_smem %s
    %ko = mul %i {bk}
    async_copy @a 0 %ko %va %f
    async_copy @b %ko 0 %vb %f
    barrier_arrive %f
  }}
}}
task warps(4) {{
  %acc = zeros shape({m} {n})
  for %i = 0 to {trips} {{
    %s = mod %i {stages}
    %round = idiv %i {stages}
    %phase = and %round 1
    %f = local_view @full %s
    barrier_wait %f %phase
    %va = local_view @a_smem %s
    %vb = local_view @b_smem %s
    %ta = local_load %va
    %tb = local_load %vb
    %acc = async_dot %ta %tb %acc
    %acc = async_dot_wait 0 %acc
    %e = local_view @empty %s
    barrier_arrive %e
  }}
  store @c 0 0 %acc
}}
"""


def gemm_persistent(m: int = 64, n: int = 64, k: int = 128, bm: int = 32, bn: int = 32, bk: int = 32,
                    stages: int = 2, ctas: int = 2) -> str:
    """Persistent GEMM: CTAs pull output tiles from cluster launch control
    and run the staged producer/consumer K-loop for each tile."""
    tiles_n = n // bn
    tiles = (m // bm) * tiles_n
    trips = k // bk
    nbytes = (bm * bk + bk * bn) * 4
    return f"""\
kernel gemm_persistent grid({ctas} 1 1) cluster(1 1 1) warps(8) tiles({tiles})
param a tensor({m} {k})
param b tensor({k} {n})
param c tensor({m} {n})
buffer a_smem shape({bm} {bk}) f32 stages({stages}) storage(smem)
buffer b_smem shape({bk} {bn}) f32 stages({stages}) storage(smem)
barrier empty count({stages}) arrive(1)
barrier full count({stages}) arrive(1)
%clc = clc_create_context stages(1) consumers(2)
task default {{
  %it = const 0
  clc_producer %clc
  %tile = clc_consumer %clc
  %go = ne %tile -1
  while %go {{
    %tm = idiv %tile {tiles_n}
    %tn = mod %tile {tiles_n}
    %row = mul %tm {bm}
    %col = mul %tn {bn}
    for %i = 0 to {trips} {{
      %s = mod %it {stages}
      %round = idiv %it {stages}
      %phase = and %round 1
      %free_parity = xor %phase 1
      %e = local_view @empty %s
      barrier_wait %e %free_parity
      %f = local_view @full %s
      barrier_expect_bytes %f {nbytes}
      %va = local_view @a_smem %s
      %vb = local_view @b_smem %s
      %ko = mul %i {bk}
      async_copy @a %row %ko %va %f
      async_copy @b %ko %col %vb %f
      barrier_arrive %f
      %it = add %it 1
    }}
    clc_producer %clc
    %tile = clc_consumer %clc
    %go = ne %tile -1
  }}
}}
task warps(4) {{
  %it = const 0
  %tile = clc_consumer %clc
  %go = ne %tile -1
  while %go {{
    %tm = idiv %tile {tiles_n}
    %tn = mod %tile {tiles_n}
    %row = mul %tm {bm}
    %col = mul %tn {bn}
    %acc = zeros shape({bm} {bn})
    for %i = 0 to {trips} {{
      %s = mod %it {stages}
      %round = idiv %it {stages}
      %phase = and %round 1
      %f = local_view @full %s
      barrier_wait %f %phase
      %va = local_view @a_smem %s
      %vb = local_view @b_smem %s
      %ta = local_load %va
      %tb = local_load %vb
      %acc = async_dot %ta %tb %acc
      %acc = async_dot_wait 0 %acc
      %e = local_view @empty %s
      barrier_arrive %e
      %it = add %it 1
    }}
    store @c %row %col %acc
    %tile = clc_consumer %clc
    %go = ne %tile -1
  }}
}}
"""


def _allreduce(tag: str, value: str, buf: str, bar_index: int, ctas: int, rows: int) -> str:
    """Cluster all-reduce of a (rows, 1) partial: store locally, push to every
    peer with a remote store, wait locally, sum all slots in rank order."""
    return f"""\
%{tag}_bar = local_view @bars {bar_index}
%{tag}_mine = local_view @{buf} %rank
local_store %{tag}_mine %{value}
for %peer = 0 to {ctas} {{
  %{tag}_other = ne %peer %rank
  if %{tag}_other {{
    %{tag}_dst = remote_view %{tag}_mine %peer
    %{tag}_dst_bar = remote_view %{tag}_bar %peer
    async_remote_store %{tag}_dst %{value} %{tag}_dst_bar
  }}
}}
barrier_wait %{tag}_bar 0
%{tag}_sum = zeros shape({rows} 1)
for %peer = 0 to {ctas} {{
  %{tag}_slot = local_view @{buf} %peer
  %{tag}_part = local_load %{tag}_slot
  %{tag}_sum = add %{tag}_sum %{tag}_part
}}
"""


def layernorm(rows: int = 4, n: int = 1024, ctas: int = 4, eps: float = 1e-5) -> str:
    """Cluster LayerNorm: each CTA owns an N-slice, keeps it on chip, and
    all-reduces row sums and squared deviations over distributed shared memory."""
    bn = n // ctas
    return f"""\
kernel layernorm grid({ctas} 1 1) cluster({ctas} 1 1) warps(4)
param x tensor({rows} {n})
param w tensor({n})
param b tensor({n})
param y tensor({rows} {n})
param mean tensor({rows} 1)
param rstd tensor({rows} 1)
param eps scalar({eps!r})
buffer x_buff shape({rows} {bn}) f32 stages(1) storage(smem)
buffer psum shape({rows} 1) f32 stages({ctas}) storage(smem_cluster)
buffer psq shape({rows} 1) f32 stages({ctas}) storage(smem_cluster)
barrier bars count(2) arrive({ctas - 1})
%rank = cta_rank
cluster_barrier
%col = mul %rank {bn}
%x = load @x 0 %col shape({rows} {bn})
%xv = local_view @x_buff 0
local_store %xv %x
%rowsum = reduce_sum %x axis(1)
{_allreduce("s", "rowsum", "psum", 0, ctas, rows)}\
%mu = div %s_sum {n}
%dev = sub %x %mu
%dev2 = mul %dev %dev
%rowsq = reduce_sum %dev2 axis(1)
{_allreduce("q", "rowsq", "psq", 1, ctas, rows)}\
%var = div %q_sum {n}
%ve = add %var @eps
%rs = rsqrt %ve
%xr = local_load %xv
%wt = load @w %col shape({bn})
%bt = load @b %col shape({bn})
%xc = sub %xr %mu
%xn = mul %xc %rs
%xw = mul %xn %wt
%out = add %xw %bt
store @y 0 %col %out
%lead = eq %rank 0
if %lead {{
  store @mean 0 0 %mu
  store @rstd 0 0 %rs
}}
"""


def multi_device_gemm(m: int = 64, n: int = 32, k: int = 128, devices: int = 2, splits_per_device: int = 2,
                      stages: int = 2, compute_ctas: int = 1) -> str:
    """All-gather GEMM overlap: a communication CTA stages each K-split of the
    sharded operands into the compute CTA's cluster buffers and arrives
    remotely; the compute CTA waits locally and releases slots by arriving on
    the communication CTA's empty barriers."""
    kd = k // devices
    bk = kd // splits_per_device
    total = devices * splits_per_device
    cluster = 1 + compute_ctas
    body_comp = f"""\
  for %st = 0 to {stages} {{
    %pre = local_view @empty %st
    barrier_arrive %pre rank(0)
  }}
  %acc = zeros shape({m} {n})
  for %split = 0 to {total} {{
    %stage = mod %split {stages}
    %round = idiv %split {stages}
    %phase = and %round 1
    %ready = local_view @data_ready %stage
    barrier_wait %ready %phase
    %va = local_view @a_stage %stage
    %vb = local_view @b_stage %stage
    %ta = local_load %va
    %tb = local_load %vb
    %acc = async_dot %ta %tb %acc
    %acc = async_dot_wait 0 %acc
    %e = local_view @empty %stage
    barrier_arrive %e rank(0)
  }}
  %cr = sub %rank 1
  %crow = mul %cr {m}
  store @c %crow 0 %acc
"""
    return f"""\
kernel multi_device_gemm grid({cluster} 1 1) cluster({cluster} 1 1) warps(4)
param a_shards tensor({devices} {m * compute_ctas} {kd})
param b_shards tensor({devices} {kd} {n})
param c tensor({m * compute_ctas} {n})
buffer a_stage shape({m} {bk}) f32 stages({stages}) storage(smem_cluster)
buffer b_stage shape({bk} {n}) f32 stages({stages}) storage(smem_cluster)
barrier empty count({stages}) arrive({compute_ctas})
barrier data_ready count({stages}) arrive(1)
%rank = cta_rank
%is_comm = lt %rank 1
cluster_barrier
if %is_comm {{
  for %split = 0 to {total} {{
    %stage = mod %split {stages}
    %round = idiv %split {stages}
    %phase = and %round 1
    %e = local_view @empty %stage
    barrier_wait %e %phase
    %dev = idiv %split {splits_per_device}
    %kk = mod %split {splits_per_device}
    %koff = mul %kk {bk}
    for %peer = 0 to {compute_ctas} {{
      %remote_rank = add %peer 1
      %arow = mul %peer {m}
      %ga = load @a_shards %dev %arow %koff shape(1 {m} {bk})
      %ga2 = reshape %ga shape({m} {bk})
      %gb = load @b_shards %dev %koff 0 shape(1 {bk} {n})
      %gb2 = reshape %gb shape({bk} {n})
      %la = local_view @a_stage %stage
      %lb = local_view @b_stage %stage
      %ra = remote_view %la %remote_rank
      %rb = remote_view %lb %remote_rank
      local_store %ra %ga2
      local_store %rb %gb2
      %ready = local_view @data_ready %stage
      barrier_arrive %ready count(1) rank(%remote_rank)
    }}
  }}
}} else {{
{body_comp}}}
"""


def simplicial_attention(seq: int = 32, head_dim: int = 16, block_m: int = 16, groups: int = 2,
                         block_kv: int = 8, w1: int = 2, w2: int = 16, buffers: int = 2,
                         scale: float = 0.25) -> str:
    """Warp-specialized 2-simplicial attention forward.

    One producer task copies Q, the ``w1`` row-shifted K1/V1 tiles and a ring
    of K2/V2 blocks; ``groups`` replicated consumer tasks each own
    ``block_m / groups`` query rows. Per K1 shift the consumer forms
    ``q * k1``, multiplies by K2 transposed, applies the window mask, runs the
    online softmax and accumulates ``(p @ v2) * v1``.
    """
    bms = block_m // groups
    ctas = seq // block_m
    q_bytes = bms * head_dim * 4
    kv1_bytes = w1 * groups * bms * head_dim * 4
    kv2_bytes = block_kv * head_dim * 4
    # K2/V2 blocks covering [i0 - w2 + 1, i0 + block_m) per CTA
    return f"""\
kernel simplicial_attention grid({ctas} 1 1) cluster(1 1 1) warps({4 + 4 * groups})
param q tensor({seq} {head_dim})
param k1 tensor({seq} {head_dim})
param v1 tensor({seq} {head_dim})
param k2 tensor({seq} {head_dim})
param v2 tensor({seq} {head_dim})
param o tensor({seq} {head_dim})
param m tensor({seq} 1)
param scale scalar({scale!r})
buffer q_tiles shape({bms} {head_dim}) f32 stages({groups}) storage(smem)
buffer k1_tiles shape({bms} {head_dim}) f32 stages({w1 * groups}) storage(smem)
buffer v1_tiles shape({bms} {head_dim}) f32 stages({w1 * groups}) storage(smem)
buffer k2_tiles shape({block_kv} {head_dim}) f32 stages({buffers}) storage(smem)
buffer v2_tiles shape({block_kv} {head_dim}) f32 stages({buffers}) storage(smem)
barrier q_fulls count({groups}) arrive(1)
barrier k1_full count(1) arrive(1)
barrier v1_full count(1) arrive(1)
barrier k2_empty count({buffers}) arrive({groups})
barrier k2_full count({buffers}) arrive(1)
barrier v2_empty count({buffers}) arrive({groups})
barrier v2_full count({buffers}) arrive(1)
%pid = program_id 0
%i0 = mul %pid {block_m}
%lo_raw = sub %i0 {w2 - 1}
%lo_pos = max %lo_raw 0
%lo_blk = idiv %lo_pos {block_kv}
%kv2_lo = mul %lo_blk {block_kv}
%span = sub %i0 %kv2_lo
%span = add %span {block_m}
%kv2_trips = idiv %span {block_kv}
task default {{
  for %g = 0 to {groups} {{
    %qf = local_view @q_fulls %g
    barrier_expect_bytes %qf {q_bytes}
    %qv = local_view @q_tiles %g
    %gr = mul %g {bms}
    %qrow = add %i0 %gr
    async_copy @q %qrow 0 %qv %qf
    barrier_arrive %qf
  }}
  %k1f = local_view @k1_full 0
  %v1f = local_view @v1_full 0
  barrier_expect_bytes %k1f {kv1_bytes}
  barrier_expect_bytes %v1f {kv1_bytes}
  for %t = 0 to {w1} {{
    for %g = 0 to {groups} {{
      %slot = mul %t {groups}
      %slot = add %slot %g
      %gr = mul %g {bms}
      %row = add %i0 %gr
      %row = sub %row %t
      %k1v = local_view @k1_tiles %slot
      %v1v = local_view @v1_tiles %slot
      async_copy @k1 %row 0 %k1v %k1f
      async_copy @v1 %row 0 %v1v %v1f
    }}
  }}
  barrier_arrive %k1f
  barrier_arrive %v1f
  %it = const 0
  for %t = 0 to {w1} {{
    for %j = 0 to %kv2_trips {{
      %stage = mod %it {buffers}
      %round = idiv %it {buffers}
      %phase = and %round 1
      %free_parity = xor %phase 1
      %kvoff = mul %j {block_kv}
      %kvoff = add %kvoff %kv2_lo
      %k2e = local_view @k2_empty %stage
      barrier_wait %k2e %free_parity
      %k2f = local_view @k2_full %stage
      barrier_expect_bytes %k2f {kv2_bytes}
      %k2v = local_view @k2_tiles %stage
      async_copy @k2 %kvoff 0 %k2v %k2f
      barrier_arrive %k2f
      %v2e = local_view @v2_empty %stage
      barrier_wait %v2e %free_parity
      %v2f = local_view @v2_full %stage
      barrier_expect_bytes %v2f {kv2_bytes}
      %v2v = local_view @v2_tiles %stage
      async_copy @v2 %kvoff 0 %v2v %v2f
      barrier_arrive %v2f
      %it = add %it 1
    }}
  }}
}}
task warps(4) replicate({groups}) {{
  %cid = replica_id
  %qf = local_view @q_fulls %cid
  barrier_wait %qf 0
  %k1f = local_view @k1_full 0
  barrier_wait %k1f 0
  %v1f = local_view @v1_full 0
  barrier_wait %v1f 0
  %qv = local_view @q_tiles %cid
  %qt = local_load %qv
  %q_rmem = mul %qt @scale
  %acc = zeros shape({bms} {head_dim})
  %l_i = full 1.0 shape({bms} 1)
  %m_i = full -inf shape({bms} 1)
  %gr = mul %cid {bms}
  %qrow = add %i0 %gr
  %rows = iota shape({bms} {block_kv}) axis(0)
  %rows = add %rows %qrow
  %cols0 = iota shape({bms} {block_kv}) axis(1)
  %win_lo = sub %rows {w2 - 1}
  %it = const 0
  for %t = 0 to {w1} {{
    %slot = mul %t {groups}
    %slot = add %slot %cid
    %k1v = local_view @k1_tiles %slot
    %k1t = local_load %k1v
    %qk1 = mul %q_rmem %k1t
    %v1v = local_view @v1_tiles %slot
    %v1t = local_load %v1v
    %jrow = sub %rows %t
    %j_ok = ge %jrow 0
    for %j = 0 to %kv2_trips {{
      %stage = mod %it {buffers}
      %round = idiv %it {buffers}
      %phase = and %round 1
      %kvoff = mul %j {block_kv}
      %kvoff = add %kvoff %kv2_lo
      %k2f = local_view @k2_full %stage
      barrier_wait %k2f %phase
      %k2v = local_view @k2_tiles %stage
      %k2t = local_load %k2v
      %k2e = local_view @k2_empty %stage
      barrier_arrive %k2e
      %k2tt = trans %k2t
      %zs = zeros shape({bms} {block_kv})
      %s = dot %qk1 %k2tt %zs
      %cols = add %cols0 %kvoff
      %causal = le %cols %rows
      %in_win = ge %cols %win_lo
      %ok = and %causal %in_win
      %ok = and %ok %j_ok
      %s = where %ok %s -1e+30
      %rowmax = reduce_max %s axis(1)
      %m_new = max %m_i %rowmax
      %dm = sub %m_i %m_new
      %alpha = exp %dm
      %sc = sub %s %m_new
      %p = exp %sc
      %psum = reduce_sum %p axis(1)
      %l_i = mul %l_i %alpha
      %l_i = add %l_i %psum
      %acc = mul %acc %alpha
      %v2f = local_view @v2_full %stage
      barrier_wait %v2f %phase
      %v2v = local_view @v2_tiles %stage
      %v2t = local_load %v2v
      %v2e = local_view @v2_empty %stage
      barrier_arrive %v2e
      %zo = zeros shape({bms} {head_dim})
      %pv = dot %p %v2t %zo
      %pv1 = mul %pv %v1t
      %acc = add %acc %pv1
      %m_i = mov %m_new
      %it = add %it 1
    }}
  }}
  %out = div %acc %l_i
  store @o %qrow 0 %out
  %lse = log %l_i
  %lse = add %m_i %lse
  store @m %qrow 0 %lse
}}
"""


def multicast(k: int = 2, n: int = 64) -> str:
    """Rank 0 copies one tile from global memory into the same buffer of
    every CTA in the cluster with a single multicast copy."""
    ranks = " ".join(str(r) for r in range(k))
    return f"""\
kernel multicast grid({k} 1 1) cluster({k} 1 1) warps(4)
param x tensor({n})
param out tensor({k} {n})
buffer tile shape({n}) f32 stages(1) storage(smem_cluster)
barrier ready count(1) arrive(1)
%rank = cta_rank
%bar = local_view @ready 0
barrier_expect_bytes %bar {n * 4}
barrier_arrive %bar
cluster_barrier
%v = local_view @tile 0
%lead = eq %rank 0
if %lead {{
  async_copy @x 0 %v %bar multicast({ranks})
}}
barrier_wait %bar 0
%t = local_load %v
%t2 = reshape %t shape(1 {n})
store @out %rank 0 %t2
"""


def collective_gemm(m: int = 64, n: int = 32, k: int = 32, one_sided: bool = False) -> str:
    """Paired-CTA dot: each CTA holds half of A's rows and half of B's
    columns; one collective instruction yields each CTA its rows of A @ B."""
    hm, hn = m // 2, n // 2
    issue = f"""\
%f = collective_dot %ta %tb %acc ranks(0 1)
%res = async_dot_wait 0 %f
store @c %row 0 %res"""
    if one_sided:
        issue = "%lead = eq %rank 0\nif %lead {\n" + "\n".join("  " + ln for ln in issue.splitlines()) + "\n}"
    return f"""\
kernel collective_gemm grid(2 1 1) cluster(2 1 1) warps(4)
param a tensor({m} {k})
param b tensor({k} {n})
param c tensor({m} {n})
%rank = cta_rank
%row = mul %rank {hm}
%col = mul %rank {hn}
%ta = load @a %row 0 shape({hm} {k})
%tb = load @b 0 %col shape({k} {hn})
%acc = zeros shape({hm} {n})
{issue}
"""


def flag_exchange(ctas: int = 2, rounds: int = 1, with_sync: bool = True, spare_barriers: int = 1) -> str:
    """Each CTA arrives on its right neighbour's barrier and waits on its own.

    With ``with_sync`` an explicit cluster barrier separates barrier
    initialization from the first remote arrival. Every barrier declaration
    costs one initialization step, so ``spare_barriers`` widens the window in
    which an unsynchronized peer can still be uninitialized.
    """
    sync = "cluster_barrier\n" if with_sync else ""
    spares = "".join(f"barrier spare{i} count(1) arrive(1)\n" for i in range(spare_barriers))
    return f"""\
kernel flag_exchange grid({ctas} 1 1) cluster({ctas} 1 1) warps(4)
param out tensor({ctas})
barrier flag count(1) arrive(1)
{spares}%rank = cta_rank
{sync}%next = add %rank 1
%next = mod %next {ctas}
%b = local_view @flag 0
for %r = 0 to {rounds} {{
  barrier_arrive %b rank(%next)
  %parity = and %r 1
  barrier_wait %b %parity
}}
%one = full 1.0 shape(1)
store @out %rank %one
"""


# shipped corpus: file stem -> text
CORPUS = {
    "listing1": listing1,
    "gemm_pipeline": gemm_pipeline,
    "gemm_persistent": gemm_persistent,
    "layernorm": layernorm,
    "multi_device_gemm": multi_device_gemm,
    "multi_device_gemm_serial": lambda: multi_device_gemm(stages=1),
    "simplicial_attention": simplicial_attention,
    "simplicial_degenerate": lambda: simplicial_attention(w1=1),
    "multicast": lambda: multicast(4),
    "collective_gemm": collective_gemm,
    "flag_exchange": flag_exchange,
}
