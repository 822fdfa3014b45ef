#include "rtoslab/explore/stress.hpp"

#include <atomic>
#include <mutex>
#include <random>
#include <thread>
#include <vector>

#include "rtoslab/kernel/ready_list.hpp"
#include "rtoslab/sim/host_port.hpp"

namespace rtoslab::explore {

StressReport stress_ready_list(const StressOptions& opt) {
  if (opt.inserters < 1 || opt.nodes_per_inserter < 1 || opt.priority_levels < 1)
    throw kernel::ConfigError("stress run needs at least one inserter, node and priority level");
  if (opt.kind == kernel::ReadyListKind::SortedPlain)
    throw kernel::ConfigError("the plain sorted list has no concurrent insert");

  const int total = opt.inserters * opt.nodes_per_inserter;
  sim::AtomicMemory mem(sim::ReservationMode::SurvivesPreemption);
  kernel::NodeTable nodes;
  std::mt19937_64 rng(opt.seed);
  std::uniform_int_distribution<int> pick(0, opt.priority_levels - 1);
  for (int i = 0; i < total; ++i) {
    nodes.priority.push_back(pick(rng));
    nodes.next.push_back(mem.allocate("node" + std::to_string(i) + ".next"));
  }
  kernel::ArchConfig arch;
  arch.ready = opt.kind;
  arch.k_tails = opt.k_tails;
  auto list = kernel::make_ready_list(arch, nodes);
  list->allocate(mem);

  std::mutex lock;
  std::vector<kernel::ListStats> stats(static_cast<std::size_t>(opt.inserters) + 1);
  std::atomic<int> done{0};
  std::vector<int> extracted;

  auto ctx = [&](sim::HostPort& port, std::size_t who) {
    return kernel::ListCtx{&port, 8, &stats[who], true};
  };

  std::vector<std::thread> threads;
  for (int w = 0; w < opt.inserters; ++w) {
    threads.emplace_back([&, w] {
      sim::HostPort port(mem, w + 1, &lock);
      for (int i = 0; i < opt.nodes_per_inserter; ++i) {
        sim::run_to_completion(list->insert(ctx(port, static_cast<std::size_t>(w)), w * opt.nodes_per_inserter + i));
      }
      done.fetch_add(1);
    });
  }
  if (opt.extractor) {
    threads.emplace_back([&] {
      sim::HostPort port(mem, opt.inserters + 1, &lock);
      for (;;) {
        bool last_round = done.load() == opt.inserters;
        int n = sim::run_to_completion(
            list->extract_if_better(ctx(port, static_cast<std::size_t>(opt.inserters)), opt.priority_levels));
        if (n >= 0) {
          extracted.push_back(n);
        } else if (last_round) {
          break;
        } else {
          std::this_thread::yield();
        }
      }
    });
  }
  for (auto& t : threads) t.join();

  StressReport rep;
  rep.inserted = static_cast<std::uint64_t>(total);
  rep.extracted = extracted.size();
  for (const auto& s : stats) rep.restarts += s.restarts;
  if (auto e = list->check_quiescent(mem)) {
    rep.error = *e;
    return rep;
  }
  auto rest = list->members(mem);
  rep.remaining = rest.size();
  std::vector<int> seen(static_cast<std::size_t>(total), 0);
  for (int n : extracted) ++seen[static_cast<std::size_t>(n)];
  for (int n : rest) ++seen[static_cast<std::size_t>(n)];
  for (int i = 0; i < total; ++i) {
    if (seen[static_cast<std::size_t>(i)] == 0) {
      rep.error = "node " + std::to_string(i) + " was lost";
      break;
    }
    if (seen[static_cast<std::size_t>(i)] > 1) {
      rep.error = "node " + std::to_string(i) + " appears twice";
      break;
    }
  }
  return rep;
}

}  // namespace rtoslab::explore
