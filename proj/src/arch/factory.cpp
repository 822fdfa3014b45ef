#include "rtoslab/arch/architectures.hpp"

namespace rtoslab::kernel {

std::unique_ptr<Kernel> make_kernel(sim::Machine& m, const ArchConfig& arch, const StaticConfig& statics) {
  switch (arch.kind) {
    case ArchKind::Baseline:
      return std::make_unique<arch::BaselineKernel>(m, arch, statics);
    case ArchKind::Defer:
      return std::make_unique<arch::DeferKernel>(m, arch, statics);
    case ArchKind::Barriers:
      return std::make_unique<arch::BarriersKernel>(m, arch, statics);
    case ArchKind::StrictlyAtomic:
      return std::make_unique<arch::AtomicKernel>(m, arch, statics);
  }
  throw ConfigError("unknown architecture kind");
}

}  // namespace rtoslab::kernel
