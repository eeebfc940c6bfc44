#include "econ/remote_backend.hpp"

#include <httplib.h>

#include <condition_variable>
#include <mutex>

#include "econ/errors.hpp"
#include "econ/wire.hpp"

namespace econ {

class InflightLimiter {
 public:
  explicit InflightLimiter(int limit) : available_(limit < 1 ? 1 : limit) {}

  void Acquire() {
    std::unique_lock lock(mu_);
    cv_.wait(lock, [this] { return available_ > 0; });
    --available_;
  }

  void Release() {
    {
      std::lock_guard lock(mu_);
      ++available_;
    }
    cv_.notify_one();
  }

 private:
  std::mutex mu_;
  std::condition_variable cv_;
  int available_;
};

namespace {

class Slot {
 public:
  explicit Slot(InflightLimiter& limiter) : limiter_(limiter) { limiter_.Acquire(); }
  ~Slot() { limiter_.Release(); }
  Slot(const Slot&) = delete;
  Slot& operator=(const Slot&) = delete;

 private:
  InflightLimiter& limiter_;
};

// POST with one client per call (httplib clients are not shared across threads).
std::string PostJson(const RemoteOptions& options, const char* path, const std::string& body) {
  std::string last_error;
  for (int attempt = 0; attempt <= options.retries; ++attempt) {
    httplib::Client client(options.base_url);
    const auto seconds = std::chrono::duration_cast<std::chrono::seconds>(options.timeout);
    const auto micros = std::chrono::duration_cast<std::chrono::microseconds>(
        options.timeout - seconds);
    client.set_read_timeout(seconds.count(), micros.count());
    client.set_write_timeout(seconds.count(), micros.count());
    auto result = client.Post(path, body, "application/json");
    if (!result) {
      last_error = httplib::to_string(result.error());
      continue;
    }
    if (result->status == 200) return result->body;
    last_error = "HTTP " + std::to_string(result->status);
    // Client errors will not improve on retry.
    if (result->status >= 400 && result->status < 500) break;
  }
  throw BackendError(std::string("POST ") + options.base_url + path + " failed: " + last_error);
}

}  // namespace

RemoteProver::RemoteProver(RemoteOptions options)
    : options_(std::move(options)),
      limiter_(std::make_unique<InflightLimiter>(options_.max_inflight)) {}

RemoteProver::~RemoteProver() = default;

ProveResponse RemoteProver::Prove(const ProverRequest& request) const {
  Slot slot(*limiter_);
  return wire::DecodeProveResponse(PostJson(options_, "/v1/prove", wire::EncodeProveRequest(request)));
}

RemoteVerifier::RemoteVerifier(RemoteOptions options)
    : options_(std::move(options)),
      limiter_(std::make_unique<InflightLimiter>(options_.max_inflight)) {}

RemoteVerifier::~RemoteVerifier() = default;

VerifierReport RemoteVerifier::Verify(const VerifyRequest& request) const {
  Slot slot(*limiter_);
  return wire::DecodeVerifyResponse(
      PostJson(options_, "/v1/verify", wire::EncodeVerifyRequest(request)));
}

}  // namespace econ
