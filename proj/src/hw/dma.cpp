#include "rtoslab/hw/dma.hpp"

#include <algorithm>
#include <deque>
#include <fstream>
#include <sstream>

namespace rtoslab::hw {

// Frames and streams.

std::vector<std::uint8_t> encode(const Frame& f) {
  if (f.payload.size() > 0xFFFF) throw std::invalid_argument("frame payload exceeds the 16-bit length header");
  std::vector<std::uint8_t> out;
  out.reserve(kHeaderBytes + f.payload.size());
  out.push_back(static_cast<std::uint8_t>(f.payload.size() & 0xFF));
  out.push_back(static_cast<std::uint8_t>(f.payload.size() >> 8));
  out.insert(out.end(), f.payload.begin(), f.payload.end());
  return out;
}

std::vector<std::uint8_t> FrameStream::bytes() const {
  std::vector<std::uint8_t> out;
  for (const auto& f : frames) {
    auto e = encode(f);
    out.insert(out.end(), e.begin(), e.end());
  }
  return out;
}

std::size_t FrameStream::total_bytes() const {
  std::size_t n = 0;
  for (const auto& f : frames) n += kHeaderBytes + f.payload.size();
  return n;
}

FrameStream load_stream(const std::filesystem::path& p) {
  std::ifstream in(p, std::ios::binary);
  if (!in) throw std::runtime_error("cannot open stream file " + p.string());
  std::vector<std::uint8_t> data((std::istreambuf_iterator<char>(in)), std::istreambuf_iterator<char>());
  FrameStream s;
  std::size_t i = 0;
  while (i < data.size()) {
    if (data.size() - i < 6) throw std::runtime_error(p.string() + ": truncated frame record at byte " + std::to_string(i));
    Frame f;
    f.arrival = static_cast<Cycles>(data[i]) | static_cast<Cycles>(data[i + 1]) << 8 |
                static_cast<Cycles>(data[i + 2]) << 16 | static_cast<Cycles>(data[i + 3]) << 24;
    std::size_t len = static_cast<std::size_t>(data[i + 4]) | static_cast<std::size_t>(data[i + 5]) << 8;
    i += 6;
    if (data.size() - i < len) throw std::runtime_error(p.string() + ": truncated payload at byte " + std::to_string(i));
    f.payload.assign(data.begin() + static_cast<std::ptrdiff_t>(i), data.begin() + static_cast<std::ptrdiff_t>(i + len));
    i += len;
    s.frames.push_back(std::move(f));
  }
  return s;
}

void save_stream(const FrameStream& s, const std::filesystem::path& p) {
  std::ofstream out(p, std::ios::binary);
  if (!out) throw std::runtime_error("cannot write stream file " + p.string());
  for (const auto& f : s.frames) {
    if (f.arrival > 0xFFFFFFFFULL) throw std::invalid_argument("arrival cycle does not fit the stream format");
    if (f.payload.size() > 0xFFFF) throw std::invalid_argument("frame payload exceeds the 16-bit length header");
    const std::uint8_t hdr[6] = {static_cast<std::uint8_t>(f.arrival), static_cast<std::uint8_t>(f.arrival >> 8),
                                 static_cast<std::uint8_t>(f.arrival >> 16), static_cast<std::uint8_t>(f.arrival >> 24),
                                 static_cast<std::uint8_t>(f.payload.size()), static_cast<std::uint8_t>(f.payload.size() >> 8)};
    out.write(reinterpret_cast<const char*>(hdr), 6);
    out.write(reinterpret_cast<const char*>(f.payload.data()), static_cast<std::streamsize>(f.payload.size()));
  }
}

FrameStream bundled_stream() {
  FrameStream s;
  const std::size_t sizes[5] = {17, 120, 3, 64, 250};
  Cycles at = 100;
  std::uint8_t v = 1;
  for (std::size_t len : sizes) {
    Frame f;
    f.arrival = at;
    for (std::size_t i = 0; i < len; ++i) f.payload.push_back(v = static_cast<std::uint8_t>(v * 37 + 11));
    at += (kHeaderBytes + len) * 4 + 40;
    s.frames.push_back(std::move(f));
  }
  return s;
}

// Controller.

DmaController::DmaController(std::size_t capacity, bool strict) : ring_(capacity, 0), strict_(strict) {
  if (capacity == 0) throw std::invalid_argument("ring capacity must be positive");
}

bool DmaController::can_step(bool byte_available) const {
  if (transferring_) return true;
  if (pause_request_ && !paused_) return true;
  if (paused_) return false;
  return byte_available;
}

bool DmaController::step(std::optional<std::uint8_t> in) {
  if (transferring_) {
    write_index_ = (write_index_ + 1) % ring_.size();
    transferring_ = false;
    ++moved_;
    if (interrupt_index_ && write_index_ == *interrupt_index_) interrupt_ = true;
    return false;
  }
  if (pause_request_ && !paused_) {
    paused_ = true;
    return false;
  }
  if (paused_) return false;
  if (!in) throw std::logic_error("controller step without data");
  ring_[write_index_] = *in;
  transferring_ = true;
  return true;
}

void DmaController::release_pause() {
  pause_request_ = false;
  paused_ = false;
}

std::size_t DmaController::write_index() const { return write_index_; }

void DmaController::configure_interrupt(std::size_t ring_pos) {
  if (strict_ && !paused_) throw ProtocolFault("interrupt position written without holding the paused state");
  if (transferring_) ++torn_writes_;
  interrupt_index_ = ring_pos % ring_.size();
}

bool DmaController::take_interrupt() {
  bool r = interrupt_;
  interrupt_ = false;
  return r;
}

// Timed demo.

LossReport dma_demo(const FrameStream& stream, const DmaDemoOptions& opt) {
  const bool classic = opt.mode == DmaMode::ClassicThreshold;
  if (classic && opt.threshold == 0) throw std::invalid_argument("classic threshold mode needs a threshold");
  DmaController dc(opt.capacity, !classic);
  const std::size_t cap = opt.capacity;
  const Cycles half = std::max<Cycles>(1, opt.byte_cycles / 2);

  // Byte arrival schedule at the peripheral.
  struct Arrival {
    Cycles at;
    std::uint8_t b;
  };
  std::vector<Arrival> arrivals;
  for (const auto& f : stream.frames) {
    auto e = encode(f);
    Cycles t = f.arrival;
    for (auto b : e) {
      t = std::max(t, arrivals.empty() ? t : arrivals.back().at + opt.byte_cycles);
      arrivals.push_back({t, b});
    }
  }
  const std::uint64_t total = arrivals.size();

  LossReport rep;
  rep.frames_injected = stream.frames.size();
  rep.injected_bytes = total;
  rep.resources = classic ? "none" : "pause request and paused state fields";

  std::deque<std::uint8_t> peripheral;
  std::size_t next_arrival = 0;
  std::uint64_t written = 0;   // bytes whose move has completed
  std::uint64_t read_pos = 0;  // software consumption point, absolute
  std::vector<std::vector<std::uint8_t>> recovered;
  std::vector<bool> corrupt_ring(cap, false);

  // Reads `n` ring bytes starting at absolute position `pos`.
  auto ring_bytes = [&](std::uint64_t pos, std::size_t n) {
    std::vector<std::uint8_t> v(n);
    for (std::size_t i = 0; i < n; ++i) v[i] = dc.at(static_cast<std::size_t>((pos + i) % cap));
    return v;
  };
  // Parses frames completely present below `limit`; returns the absolute
  // position the next interrupt should fire at.
  auto parse = [&](std::uint64_t limit) {
    for (;;) {
      if (limit - read_pos < kHeaderBytes) return read_pos + kHeaderBytes;
      auto h = ring_bytes(read_pos, kHeaderBytes);
      std::size_t len = static_cast<std::size_t>(h[0]) | static_cast<std::size_t>(h[1]) << 8;
      if (limit - read_pos < kHeaderBytes + len) return read_pos + kHeaderBytes + len;
      recovered.push_back(ring_bytes(read_pos + kHeaderBytes, len));
      read_pos += kHeaderBytes + len;
    }
  };

  enum class Sw { Idle, Waiting, Pausing } sw = Sw::Idle;
  Cycles sw_ready_at = 0;
  std::uint64_t pending_target = 0;
  Cycles busy_until = 0;
  bool initial_config = !classic;
  Cycles t = 0;
  const Cycles horizon = (arrivals.empty() ? 0 : arrivals.back().at) + opt.handler_delay * 4 + 1'000'000;

  for (; t <= horizon; ++t) {
    while (next_arrival < arrivals.size() && arrivals[next_arrival].at <= t) peripheral.push_back(arrivals[next_arrival++].b);

    // Controller: one step every half byte time.
    if (t % half == 0 && dc.can_step(!peripheral.empty())) {
      bool was_transferring = dc.transferring();
      std::optional<std::uint8_t> in;
      if (!peripheral.empty()) in = peripheral.front();
      if (dc.step(in)) {
        peripheral.pop_front();
        if (written - read_pos >= cap) ++rep.overruns;
      }
      if (was_transferring && !dc.transferring()) {
        ++written;
        if (classic && written % opt.threshold == 0) {
          ++rep.interrupts;
          if (sw == Sw::Idle) {
            sw = Sw::Waiting;
            sw_ready_at = t + opt.handler_delay;
          }
        }
      }
      if (!classic && dc.take_interrupt()) {
        ++rep.interrupts;
        if (sw == Sw::Idle) {
          sw = Sw::Waiting;
          sw_ready_at = t + opt.handler_delay;
        }
      }
    }

    // Software.
    if (t < busy_until) continue;
    if (initial_config || (sw == Sw::Waiting && t >= sw_ready_at)) {
      initial_config = false;
      if (classic) {
        std::size_t before = recovered.size();
        // Only whole threshold blocks are signalled as complete.
        parse(written - written % opt.threshold);
        busy_until = t + opt.handler_cycles * (recovered.size() - before);
        sw = Sw::Idle;
      } else {
        dc.request_pause();
        ++rep.handshakes;
        sw = Sw::Pausing;
      }
    } else if (sw == Sw::Pausing && dc.paused()) {
      std::size_t before = recovered.size();
      // The write index only moves while unpaused, so `written` is exact here.
      pending_target = parse(written);
      dc.configure_interrupt(static_cast<std::size_t>(pending_target % cap));
      dc.release_pause();
      busy_until = t + opt.handler_cycles * (recovered.size() - before);
      sw = Sw::Idle;
    }

    bool input_done = next_arrival == arrivals.size() && peripheral.empty() && !dc.transferring();
    if (input_done && sw == Sw::Idle && t >= busy_until) {
      bool all_parsed = read_pos >= written;
      bool target_unreachable = pending_target > written || classic;
      if (all_parsed || target_unreachable) break;
    }
  }
  rep.finished_at = t;
  rep.torn_writes = dc.torn_writes();

  rep.frames_recovered = recovered.size();
  bool intact = recovered.size() == stream.frames.size();
  for (std::size_t i = 0; i < recovered.size(); ++i) {
    if (i < stream.frames.size() && recovered[i] == stream.frames[i].payload) {
      rep.recovered_bytes += kHeaderBytes + recovered[i].size();
    } else {
      intact = false;
    }
  }
  rep.lost = rep.injected_bytes - std::min(rep.injected_bytes, rep.recovered_bytes);
  rep.intact = intact && rep.lost == 0 && rep.overruns == 0;
  return rep;
}

// Handshake exploration.

DmaHandshakeSubject::DmaHandshakeSubject(std::size_t bytes, bool use_handshake, std::size_t capacity)
    : dc_(capacity, use_handshake), bytes_(bytes), handshake_(use_handshake) {}

std::vector<explore::Choice> DmaHandshakeSubject::choices() {
  std::vector<explore::Choice> out;
  if (finished_ || violation_) return out;
  if (dc_.can_step(fed_ < bytes_)) out.push_back({kController, 0});
  const int end = handshake_ ? 5 : 2;
  bool handler_blocked = handshake_ && pc_ == 1 && !dc_.paused();
  if (pc_ < end && !handler_blocked) out.push_back({kHandler, 0});
  return out;
}

void DmaHandshakeSubject::fail(std::string inv, std::string msg) {
  if (violation_) return;
  violation_ = explore::Violation{std::move(inv), std::move(msg), steps_};
}

void DmaHandshakeSubject::apply(const explore::Choice& c) {
  ++steps_;
  if (c.kind == kController) {
    ++controller_steps_;
    std::optional<std::uint8_t> in;
    if (fed_ < bytes_) in = static_cast<std::uint8_t>(0xA0 + fed_);
    if (dc_.step(in)) ++fed_;
    return;
  }
  ++handler_steps_;
  try {
    if (handshake_) {
      switch (pc_) {
        case 0: dc_.request_pause(); break;
        case 1: break;  // observed the paused state
        case 2: seen_index_ = dc_.write_index(); break;
        case 3: {
          auto before = dc_.torn_writes();
          dc_.configure_interrupt(seen_index_ + 4);
          if (dc_.torn_writes() != before) fail("torn-state", "interrupt position written during a byte move");
          break;
        }
        case 4: dc_.release_pause(); break;
      }
    } else {
      switch (pc_) {
        case 0: seen_index_ = dc_.write_index(); break;
        case 1: {
          auto before = dc_.torn_writes();
          dc_.configure_interrupt(seen_index_ + 4);
          if (dc_.torn_writes() != before) fail("torn-state", "interrupt position written during a byte move");
          break;
        }
      }
    }
  } catch (const ProtocolFault& e) {
    fail("protocol", e.what());
  }
  ++pc_;
}

void DmaHandshakeSubject::finish() {
  if (finished_) return;
  finished_ = true;
  if (violation_) return;
  if (dc_.moved() != bytes_) fail("progress", "controller stopped with bytes undelivered");
  if (!dc_.interrupt_index()) fail("progress", "interrupt position never configured");
}

std::string DmaHandshakeSubject::label(const explore::Choice& c) const {
  if (c.kind == kController) return "controller#" + std::to_string(controller_steps_ - 1);
  return "handler#" + std::to_string(handler_steps_ - 1);
}

std::string DmaHandshakeSubject::logical_state() const {
  std::ostringstream os;
  os << "wi=" << dc_.write_index() << ",moved=" << dc_.moved() << ",irq=";
  if (dc_.interrupt_index()) os << *dc_.interrupt_index();
  else os << '-';
  if (violation_) os << '|' << violation_->invariant << ':' << violation_->message;
  return os.str();
}

}  // namespace rtoslab::hw
