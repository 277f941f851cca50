#include <arpa/inet.h>
#include <netinet/in.h>
#include <poll.h>
#include <sys/socket.h>
#include <unistd.h>

#include <cerrno>
#include <cstring>

#include "extremctl/error.hpp"
#include "extremctl/stream.hpp"

namespace extremctl::stream {
namespace {

sockaddr_in loopback(std::uint16_t port) {
  sockaddr_in addr{};
  addr.sin_family = AF_INET;
  addr.sin_port = htons(port);
  addr.sin_addr.s_addr = htonl(INADDR_LOOPBACK);
  return addr;
}

int open_socket() {
  const int fd = ::socket(AF_INET, SOCK_DGRAM, 0);
  if (fd < 0) throw Error(ErrorCode::kIo, std::string("socket: ") + std::strerror(errno));
  return fd;
}

}  // namespace

UdpSender::UdpSender(std::uint16_t port) : fd_(open_socket()), port_(port) {}

UdpSender::~UdpSender() {
  if (fd_ >= 0) ::close(fd_);
}

void UdpSender::send(const PoseFrame& frame) {
  const FrameBytes bytes = encode_frame(frame);
  const sockaddr_in addr = loopback(port_);
  const auto n = ::sendto(fd_, bytes.data(), bytes.size(), 0, reinterpret_cast<const sockaddr*>(&addr), sizeof addr);
  if (n != static_cast<ssize_t>(bytes.size())) {
    throw Error(ErrorCode::kIo, std::string("sendto: ") + std::strerror(errno));
  }
}

UdpReceiver::UdpReceiver(LatestValueMailbox& mailbox, std::uint16_t port) : fd_(open_socket()), sink_(mailbox) {
  sockaddr_in addr = loopback(port);
  if (::bind(fd_, reinterpret_cast<const sockaddr*>(&addr), sizeof addr) != 0) {
    const std::string why = std::strerror(errno);
    ::close(fd_);
    throw Error(ErrorCode::kIo, "bind: " + why);
  }
  socklen_t len = sizeof addr;
  ::getsockname(fd_, reinterpret_cast<sockaddr*>(&addr), &len);
  port_ = ntohs(addr.sin_port);

  thread_ = std::jthread([this](std::stop_token stop) {
    // One byte of slack so oversized datagrams are seen as such.
    std::array<std::uint8_t, kFrameSize + 1> buf{};
    pollfd pfd{fd_, POLLIN, 0};
    while (!stop.stop_requested()) {
      if (::poll(&pfd, 1, 20) <= 0) continue;
      const auto n = ::recv(fd_, buf.data(), buf.size(), 0);
      if (n < 0) continue;
      if (sink_.accept(std::span<const std::uint8_t>(buf.data(), static_cast<std::size_t>(n)))) {
        forwarded_.fetch_add(1);
      }
    }
  });
}

void UdpReceiver::stop() {
  thread_.request_stop();
  if (thread_.joinable()) thread_.join();
}

UdpReceiver::~UdpReceiver() {
  stop();
  if (fd_ >= 0) ::close(fd_);
}

}  // namespace extremctl::stream
