#include "vadose/exchange.hpp"

#include <bit>
#include <chrono>
#include <cmath>
#include <limits>
#include <thread>

namespace vadose {

namespace {

constexpr std::uint64_t kOpReduceMax = 1;
constexpr std::uint64_t kOpReduceSum = 2;
constexpr std::uint64_t kOpExchange = 3;
constexpr std::uint64_t kOpGather = 4;

double identity_of(Reduce op) {
  return op == Reduce::Sum ? 0.0 : -std::numeric_limits<double>::infinity();
}

double combine(Reduce op, double a, double b) {
  return op == Reduce::Sum ? a + b : (a < b ? b : a);
}

double tree_combine_into(Reduce op, std::span<const double> slots,
                         std::vector<double>& buf) {
  const std::size_t width = std::bit_ceil(slots.size());
  buf.assign(width, identity_of(op));
  std::copy(slots.begin(), slots.end(), buf.begin());
  for (std::size_t s = 1; s < width; s <<= 1)
    for (std::size_t i = 0; i + s < width; i += 2 * s)
      buf[i] = combine(op, buf[i], buf[i + s]);
  return buf[0];
}

}  // namespace

namespace detail {

double tree_combine(Reduce op, std::span<const double> slots) {
  std::vector<double> buf;
  return tree_combine_into(op, slots, buf);
}

}  // namespace detail

class WorkerGroup {
 public:
  WorkerGroup(int parts, double timeout_s)
      : n(parts), timeout(timeout_s), mail(std::size_t(parts) * parts * 2) {
    for (auto& s : slots) s.assign(parts, 0.0);
    for (auto& t : tags) t.assign(parts, 0);
  }

  // Blocks until all workers arrive. Throws SyncError when the group is
  // poisoned, a worker exited early, or the deadline passes.
  void barrier() {
    check_poison();
    const std::uint64_t g = gen.load(std::memory_order_acquire);
    if (arrived.fetch_add(1, std::memory_order_acq_rel) + 1 == n) {
      arrived.store(0, std::memory_order_relaxed);
      gen.fetch_add(1, std::memory_order_release);
      return;
    }
    const auto deadline = std::chrono::steady_clock::now() +
                          std::chrono::duration<double>(timeout);
    int spins = 0;
    while (gen.load(std::memory_order_acquire) == g) {
      check_poison();
      if (exited.load(std::memory_order_acquire) > 0) {
        // A releaser may bump the generation and then return; only an exit
        // without a matching arrival is a genuine deadlock.
        if (gen.load(std::memory_order_acquire) != g) return;
        poison.store(true, std::memory_order_relaxed);
        throw SyncError("a worker returned while others wait at a collective");
      }
      if (++spins > 64) {
        std::this_thread::yield();
        if (spins % 4096 == 0 && std::chrono::steady_clock::now() > deadline) {
          poison.store(true, std::memory_order_relaxed);
          throw SyncError("collective timed out: workers issued mismatched or "
                          "missing collective calls");
        }
      }
    }
  }

  void check_poison() const {
    if (poison.load(std::memory_order_relaxed))
      throw SyncError("worker group poisoned by a failed worker");
  }

  std::vector<double>& outbox(int from, int to, int parity) {
    return mail[(std::size_t(from) * n + to) * 2 + parity];
  }

  int n;
  double timeout;
  std::atomic<bool> poison{false};
  std::atomic<int> exited{0};
  std::atomic<std::uint64_t> gen{0};
  std::atomic<int> arrived{0};
  std::array<std::vector<double>, 2> slots;
  std::array<std::vector<std::uint64_t>, 2> tags;
  std::vector<std::vector<double>> mail;  // [from][to][parity], lazily sized
};

int Comm::parts() const { return group_->n; }

namespace {

void verify_tags(WorkerGroup& g, const std::vector<std::uint64_t>& tags,
                 std::uint64_t expect) {
  for (int p = 0; p < g.n; ++p)
    if (tags[p] != expect) {
      g.poison.store(true, std::memory_order_relaxed);
      throw SyncError("mismatched collective calls across workers");
    }
}

}  // namespace

double Comm::reduce(Reduce op, double local) {
  WorkerGroup& g = *group_;
  const int parity = int(seq_ & 1);
  const std::uint64_t tag =
      (seq_ << 3) | (op == Reduce::Sum ? kOpReduceSum : kOpReduceMax);
  g.slots[parity][part_] = local;
  g.tags[parity][part_] = tag;
  g.barrier();
  verify_tags(g, g.tags[parity], tag);
  const double out = tree_combine_into(
      op, std::span<const double>(g.slots[parity].data(), std::size_t(g.n)),
      scratch_);
  ++reduces_;
  ++seq_;
  return out;
}

void Comm::exchange(std::span<double> field, const PartTopology& topo) {
  if (field.size() < std::size_t(topo.n_own + topo.n_halo))
    throw InvalidInput("field is smaller than the owned plus halo layout");
  WorkerGroup& g = *group_;
  const int parity = int(seq_ & 1);
  const std::uint64_t tag = (seq_ << 3) | kOpExchange;
  for (const auto& link : topo.links) {
    auto& out = g.outbox(part_, link.neighbor, parity);
    out.resize(link.send_local.size());
    for (std::size_t i = 0; i < link.send_local.size(); ++i)
      out[i] = field[link.send_local[i]];
  }
  g.tags[parity][part_] = tag;
  g.barrier();
  verify_tags(g, g.tags[parity], tag);
  for (const auto& link : topo.links) {
    const auto& in = g.outbox(link.neighbor, part_, parity);
    if (in.size() != link.recv_slot.size()) {
      g.poison.store(true, std::memory_order_relaxed);
      throw SyncError("halo link lists disagree between neighboring parts");
    }
    for (std::size_t i = 0; i < link.recv_slot.size(); ++i)
      field[link.recv_slot[i]] = in[i];
  }
  ++exchanges_;
  ++seq_;
}

void Comm::gather(std::span<const double> owned, const PartTopology& topo,
                  std::span<double> global) {
  if (owned.size() < std::size_t(topo.n_own))
    throw InvalidInput("owned span is smaller than the part's cell count");
  WorkerGroup& g = *group_;
  g.barrier();  // prior readers of the shared buffer are done after this
  for (int l = 0; l < topo.n_own; ++l) {
    const std::int64_t gid = topo.owned_global[l];
    if (gid < 0 || std::size_t(gid) >= global.size())
      throw InvalidInput("global buffer is smaller than the grid");
    global[std::size_t(gid)] = owned[l];
  }
  const int parity = int(seq_ & 1);
  const std::uint64_t tag = (seq_ << 3) | kOpGather;
  g.tags[parity][part_] = tag;
  g.barrier();
  verify_tags(g, g.tags[parity], tag);
  ++gathers_;
  ++seq_;
}

void Comm::check_uniform_collectives() {
  const double count = double(reduces_ + exchanges_ + gathers_);
  const double total = reduce(Reduce::Sum, count);
  const double top = reduce(Reduce::Max, count);
  if (total != parts() * top)
    throw SyncError("workers issued different numbers of collectives");
}

void run_spmd(int parts, const std::function<void(Comm&)>& fn,
              double timeout_s) {
  if (parts < 1) throw InvalidInput("part count must be at least 1");
  WorkerGroup group(parts, timeout_s);
  if (parts == 1) {
    Comm comm(&group, 0);
    fn(comm);
    return;
  }
  std::vector<std::exception_ptr> errors(parts);
  std::vector<std::thread> threads;
  threads.reserve(parts);
  for (int p = 0; p < parts; ++p)
    threads.emplace_back([&group, &fn, &errors, p] {
      Comm comm(&group, p);
      try {
        fn(comm);
        group.exited.fetch_add(1, std::memory_order_release);
      } catch (...) {
        errors[p] = std::current_exception();
        group.poison.store(true, std::memory_order_relaxed);
      }
    });
  for (auto& t : threads) t.join();
  // prefer a root-cause failure over secondary sync errors
  for (auto& e : errors) {
    if (!e) continue;
    try {
      std::rethrow_exception(e);
    } catch (const SyncError&) {
      continue;
    } catch (...) {
      std::rethrow_exception(e);
    }
  }
  for (auto& e : errors)
    if (e) std::rethrow_exception(e);
}

}  // namespace vadose
