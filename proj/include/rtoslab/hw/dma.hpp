#pragma once

#include <cstdint>
#include <filesystem>
#include <optional>
#include <string>
#include <vector>

#include "rtoslab/explore/subject.hpp"
#include "rtoslab/sim/types.hpp"

namespace rtoslab::hw {

using sim::Cycles;

/// Raised when software breaks the controller's configuration protocol.
class ProtocolFault : public std::runtime_error {
 public:
  explicit ProtocolFault(const std::string& what) : std::runtime_error(what) {}
};

inline constexpr std::size_t kHeaderBytes = 2;  // little-endian payload length

struct Frame {
  Cycles arrival = 0;  // cycle the first byte reaches the peripheral
  std::vector<std::uint8_t> payload;
};

struct FrameStream {
  std::vector<Frame> frames;

  /// Header plus payload of every frame, in order.
  std::vector<std::uint8_t> bytes() const;
  std::size_t total_bytes() const;
};

std::vector<std::uint8_t> encode(const Frame& f);

/// Binary stream file: per frame a u32 LE arrival cycle, a u16 LE payload
/// length and the payload.
FrameStream load_stream(const std::filesystem::path& p);
void save_stream(const FrameStream& s, const std::filesystem::path& p);
/// Five frames of distinct, variable sizes arriving back to back.
FrameStream bundled_stream();

/// Circular DMA with an interrupt position and a pause handshake. A byte
/// moves in two controller steps: the data write, then the status update
/// that advances the write index. Pause requests are honoured only between
/// byte moves.
class DmaController {
 public:
  explicit DmaController(std::size_t capacity = 1024, bool strict = true);

  // Controller side.
  /// True when a step would change state.
  bool can_step(bool byte_available) const;
  /// One controller step. `in` is consumed by the data write of a move.
  /// Returns true when the step consumed `in`.
  bool step(std::optional<std::uint8_t> in);

  // Software side.
  void request_pause() { pause_request_ = true; }
  void release_pause();
  bool paused() const { return paused_; }
  std::size_t write_index() const;
  void configure_interrupt(std::size_t ring_pos);
  bool take_interrupt();

  // Inspection.
  std::size_t capacity() const { return ring_.size(); }
  std::uint8_t at(std::size_t pos) const { return ring_[pos % ring_.size()]; }
  bool transferring() const { return transferring_; }
  bool pause_requested() const { return pause_request_; }
  std::optional<std::size_t> interrupt_index() const { return interrupt_index_; }
  std::uint64_t torn_writes() const { return torn_writes_; }
  std::uint64_t moved() const { return moved_; }

 private:
  std::vector<std::uint8_t> ring_;
  std::size_t write_index_ = 0;
  std::optional<std::size_t> interrupt_index_;
  bool pause_request_ = false;
  bool paused_ = false;
  bool transferring_ = false;
  bool interrupt_ = false;
  bool strict_;
  std::uint64_t torn_writes_ = 0;
  std::uint64_t moved_ = 0;
};

enum class DmaMode {
  CircularWithInterrupts,  // interrupt position reprogrammed per frame
  ClassicThreshold,        // interrupt every fixed number of bytes
};

struct DmaDemoOptions {
  std::size_t capacity = 1024;
  Cycles byte_cycles = 4;         // controller time per byte move (two steps)
  Cycles handler_delay = 10'000;  // software response time to an interrupt
  Cycles handler_cycles = 200;    // software time per recovered frame
  DmaMode mode = DmaMode::CircularWithInterrupts;
  std::size_t threshold = 0;      // ClassicThreshold: bytes per interrupt
};

struct LossReport {
  std::uint64_t frames_injected = 0;
  std::uint64_t frames_recovered = 0;
  std::uint64_t injected_bytes = 0;
  std::uint64_t recovered_bytes = 0;
  std::uint64_t lost = 0;           // bytes not recovered intact
  std::uint64_t overruns = 0;       // ring overwrites of unread data
  std::uint64_t interrupts = 0;
  std::uint64_t handshakes = 0;
  std::uint64_t torn_writes = 0;
  bool intact = false;              // recovered stream equals the injected one
  Cycles finished_at = 0;
  std::string resources;            // extra hardware the technique needs
};

/// Feeds `stream` into a controller while software reacts to each interrupt
/// only after `handler_delay` cycles, then parses frames out of the ring.
LossReport dma_demo(const FrameStream& stream, const DmaDemoOptions& opt = {});

/// Controller and configuring handler as two interleaved contexts. The
/// handler reprograms the interrupt position once, with or without the
/// pause handshake; the explorer checks that the position is never written
/// while a byte move is half done.
class DmaHandshakeSubject final : public explore::Subject {
 public:
  enum ChoiceKind { kController = 0, kHandler = 1 };

  DmaHandshakeSubject(std::size_t bytes, bool use_handshake, std::size_t capacity = 16);

  std::vector<explore::Choice> choices() override;
  void apply(const explore::Choice& c) override;
  void finish() override;
  const std::optional<explore::Violation>& violation() const override { return violation_; }
  std::uint64_t steps() const override { return steps_; }
  std::string label(const explore::Choice& c) const override;
  std::string logical_state() const override;

 private:
  void fail(std::string inv, std::string msg);

  DmaController dc_;
  std::size_t bytes_;
  std::size_t fed_ = 0;
  bool handshake_;
  int pc_ = 0;  // handler program counter
  std::size_t seen_index_ = 0;
  std::uint64_t steps_ = 0;
  std::uint64_t controller_steps_ = 0;
  std::uint64_t handler_steps_ = 0;
  std::optional<explore::Violation> violation_;
  bool finished_ = false;
};

}  // namespace rtoslab::hw
