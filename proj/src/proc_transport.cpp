#include "rdc/runtime/proc_transport.hpp"

#include <sys/socket.h>
#include <sys/types.h>
#include <sys/wait.h>
#include <unistd.h>

#include <cerrno>
#include <cstdio>
#include <cstring>
#include <exception>
#include <memory>
#include <mutex>
#include <thread>
#include <vector>

#include "rdc/errors.hpp"
#include "rdc/runtime/runtime.hpp"
#include "rdc/runtime/transport.hpp"

namespace rdc {

namespace {

void writeAll(int fd, const void* data, std::size_t len) {
  const char* p = static_cast<const char*>(data);
  while (len > 0) {
    ssize_t n = ::write(fd, p, len);
    if (n < 0) {
      if (errno == EINTR) continue;
      throw ProtocolError(std::string("pipe write failed: ") + std::strerror(errno));
    }
    p += n;
    len -= static_cast<std::size_t>(n);
  }
}

// false on clean EOF at a message boundary
bool readAll(int fd, void* data, std::size_t len, bool atBoundary) {
  char* p = static_cast<char*>(data);
  std::size_t got = 0;
  while (got < len) {
    ssize_t n = ::read(fd, p + got, len - got);
    if (n < 0) {
      if (errno == EINTR) continue;
      throw ProtocolError(std::string("pipe read failed: ") + std::strerror(errno));
    }
    if (n == 0) {
      if (atBoundary && got == 0) return false;
      throw ProtocolError("peer closed mid-frame");
    }
    got += static_cast<std::size_t>(n);
  }
  return true;
}

std::uint32_t readU32(const char* p) {
  std::uint32_t v;
  std::memcpy(&v, p, 4);
  return v;
}

// one frame as it appears on the wire, length prefix included
bool readFrame(int fd, Bytes& out) {
  char lenBuf[4];
  if (!readAll(fd, lenBuf, 4, true)) return false;
  std::uint32_t len = readU32(lenBuf);
  out.resize(4 + len);
  std::memcpy(out.data(), lenBuf, 4);
  readAll(fd, out.data() + 4, len, false);
  return true;
}

void writeFrame(int fd, const Bytes& frame) { writeAll(fd, frame.data(), frame.size()); }

/// Child side: every outbound frame goes to the parent prefixed with its
/// final destination; the parent relays. Self-sends short-circuit.
class ChildTransport : public Transport {
public:
  ChildTransport(std::uint32_t places, std::uint32_t self, int parentFd, Inbox& inbox)
      : Transport(places), self_(self), fd_(parentFd), inbox_(inbox) {}

  void send(std::uint32_t src, std::uint32_t dst, Bytes frame) override {
    count(src, dst, frame.size());
    if (dst == self_) {
      inbox_.push(std::move(frame));
      return;
    }
    std::lock_guard lock(m_);
    char dstBuf[4];
    std::memcpy(dstBuf, &dst, 4);
    writeAll(fd_, dstBuf, 4);
    writeFrame(fd_, frame);
  }

private:
  std::uint32_t self_;
  int fd_;
  Inbox& inbox_;
  std::mutex m_;
};

/// Parent side: place 0 writes frames straight down each child's socket.
/// Router threads (owned by runProcWorld, not this class) share the same
/// per-destination mutexes when relaying.
class ParentTransport : public Transport {
public:
  ParentTransport(std::uint32_t places, std::vector<int> childFds, Inbox& inbox)
      : Transport(places), fds_(std::move(childFds)), locks_(fds_.size()), inbox_(inbox) {
    for (auto& l : locks_) l = std::make_unique<std::mutex>();
  }

  void send(std::uint32_t src, std::uint32_t dst, Bytes frame) override {
    count(src, dst, frame.size());
    if (dst == 0) {
      inbox_.push(std::move(frame));
      return;
    }
    deliver(dst, frame);
  }

  // dst >= 1; used by send and by the relay threads
  void deliver(std::uint32_t dst, const Bytes& frame) {
    std::lock_guard lock(*locks_[dst - 1]);
    writeFrame(fds_[dst - 1], frame);
  }

private:
  std::vector<int> fds_;
  std::vector<std::unique_ptr<std::mutex>> locks_;
  Inbox& inbox_;
};

[[noreturn]] void childMain(RuntimeConfig cfg, std::uint32_t self, int parentFd) {
  int exitCode = 0;
  try {
    Inbox inbox;
    auto transport = std::make_unique<ChildTransport>(cfg.places, self, parentFd, inbox);
    Runtime rt(cfg, self, std::move(transport), inbox);
    // frames from the parent feed the inbox until the shutdown frame arrives
    std::thread reader([&] {
      try {
        Bytes frame;
        while (readFrame(parentFd, frame)) inbox.push(std::move(frame));
      } catch (...) {
        // parent went away; the dispatcher will stop via inbox close below
      }
      inbox.close();
    });
    reader.detach();
    rt.localPlace(self).joinDispatcher();
    rt.shutdown();
  } catch (const std::exception& e) {
    std::fprintf(stderr, "place %u: %s\n", self, e.what());
    exitCode = 1;
  }
  std::fflush(nullptr);
  ::_exit(exitCode);  // never unwind back into the forked caller
}

}  // namespace

void runProcWorld(RuntimeConfig cfg, const std::function<void()>& body) {
  cfg.validate();
  cfg.transport = TransportKind::Proc;
  std::uint32_t n = cfg.places;

  // all sockets and forks happen before this process grows threads
  std::vector<int> parentEnd(n - 1, -1);
  std::vector<pid_t> pids;
  for (std::uint32_t c = 1; c < n; ++c) {
    int sv[2];
    if (::socketpair(AF_UNIX, SOCK_STREAM, 0, sv) != 0)
      throw ConfigError(std::string("socketpair failed: ") + std::strerror(errno));
    pid_t pid = ::fork();
    if (pid < 0) throw ConfigError(std::string("fork failed: ") + std::strerror(errno));
    if (pid == 0) {
      ::close(sv[0]);
      for (int fd : parentEnd)
        if (fd >= 0) ::close(fd);
      childMain(cfg, c, sv[1]);
    }
    ::close(sv[1]);
    parentEnd[c - 1] = sv[0];
    pids.push_back(pid);
  }

  std::exception_ptr bodyError;
  {
    Inbox inbox;
    auto transport = std::make_unique<ParentTransport>(n, parentEnd, inbox);
    ParentTransport& pt = *transport;
    Runtime rt(cfg, 0, std::move(transport), inbox);

    // per-child relays: dst 0 frames land here, the rest hop across
    std::vector<std::thread> routers;
    for (std::uint32_t c = 1; c < n; ++c) {
      int fd = parentEnd[c - 1];
      routers.emplace_back([fd, &inbox, &pt] {
        try {
          for (;;) {
            char dstBuf[4];
            if (!readAll(fd, dstBuf, 4, true)) return;
            std::uint32_t dst = readU32(dstBuf);
            Bytes frame;
            if (!readFrame(fd, frame)) throw ProtocolError("child closed mid-message");
            if (dst == 0)
              inbox.push(std::move(frame));
            else
              pt.deliver(dst, frame);
          }
        } catch (const std::exception& e) {
          std::fprintf(stderr, "relay: %s\n", e.what());
        }
      });
    }

    try {
      rt.run(body);
    } catch (...) {
      bodyError = std::current_exception();
    }

    for (std::uint32_t c = 1; c < n; ++c) {
      ByteWriter w;
      w.u32(0);
      w.u32(c);
      try {
        pt.deliver(c, encodeFrame(MsgTag::Shutdown, w.take()));
      } catch (...) {
        // child already gone; waitpid below reports it
      }
    }
    inbox.close();
    rt.shutdown();
    for (auto& t : routers) t.join();
  }

  int bad = 0;
  for (pid_t pid : pids) {
    int status = 0;
    ::waitpid(pid, &status, 0);
    if (!WIFEXITED(status) || WEXITSTATUS(status) != 0) ++bad;
  }
  for (int fd : parentEnd) ::close(fd);
  if (bodyError) std::rethrow_exception(bodyError);
  if (bad > 0) throw Error(std::to_string(bad) + " child place(s) exited uncleanly");
}

}  // namespace rdc
