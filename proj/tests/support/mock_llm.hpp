#pragma once

// In-process stand-in for an extraction endpoint. The article text follows
// the "ARTICLE:\n" marker in the prompt; every whitespace word becomes a
// Person entity. Words steer failure modes:
//   fail<N>   first N requests for this article answer 500
//   slow      sleep 1.5 s before answering
//   nosent    omit the BEGIN_KG/END_KG sentinels

#include <atomic>
#include <chrono>
#include <map>
#include <mutex>
#include <sstream>
#include <string>
#include <thread>

#include <httplib.h>
#include <nlohmann/json.hpp>

namespace testkit {

inline constexpr const char* kMockPrompt = "ONTOLOGY:\n{{ONTOLOGY}}\nARTICLE:\n{{ARTICLE}}";

class MockLlm {
 public:
  explicit MockLlm(std::string required_token = "") : token_(std::move(required_token)) {
    server_.Post("/v1/extract", [this](const httplib::Request& req, httplib::Response& res) { handle(req, res); });
    server_.Get("/feed", [this](const httplib::Request&, httplib::Response& res) {
      std::lock_guard lock(mu_);
      res.set_content(feed_, "text/plain");
    });
    port_ = server_.bind_to_any_port("127.0.0.1");
    thread_ = std::thread([this] { server_.listen_after_bind(); });
    server_.wait_until_ready();
  }

  ~MockLlm() {
    server_.stop();
    thread_.join();
  }

  std::string url() const { return "http://127.0.0.1:" + std::to_string(port_) + "/v1/extract"; }
  std::string feed_url() const { return "http://127.0.0.1:" + std::to_string(port_) + "/feed"; }

  void set_feed(std::string body) {
    std::lock_guard lock(mu_);
    feed_ = std::move(body);
  }

  int requests() const { return requests_.load(); }
  int max_in_flight() const { return max_in_flight_.load(); }
  std::string last_model() {
    std::lock_guard lock(mu_);
    return last_model_;
  }

 private:
  void handle(const httplib::Request& req, httplib::Response& res) {
    ++requests_;
    const int now = ++in_flight_;
    for (int seen = max_in_flight_.load(); now > seen && !max_in_flight_.compare_exchange_weak(seen, now);) {
    }
    respond(req, res);
    --in_flight_;
  }

  void respond(const httplib::Request& req, httplib::Response& res) {
    if (!token_.empty() && req.get_header_value("Authorization") != "Bearer " + token_) {
      res.status = 401;
      return;
    }
    const auto body = nlohmann::json::parse(req.body);
    const std::string prompt = body.at("prompt").get<std::string>();
    {
      std::lock_guard lock(mu_);
      last_model_ = body.at("model").get<std::string>();
    }
    const auto mark = prompt.find("ARTICLE:\n");
    const std::string article = mark == std::string::npos ? "" : prompt.substr(mark + 9);

    std::istringstream words(article);
    std::string w, records;
    bool sentinels = true;
    int fail_first = 0;
    while (words >> w) {
      if (w == "slow") std::this_thread::sleep_for(std::chrono::milliseconds(1500));
      if (w == "nosent") sentinels = false;
      if (w.rfind("fail", 0) == 0 && w.size() > 4) fail_first = std::stoi(w.substr(4));
      records += "E\t" + w + "\tPerson\tmodel-made-this-up\n";
    }
    {
      std::lock_guard lock(mu_);
      if (attempts_[article]++ < fail_first) {
        res.status = 500;
        return;
      }
    }
    std::string out = sentinels ? "Sure.\nBEGIN_KG\n" + records + "not a record\nEND_KG\ntrailing" : records;
    res.set_content(nlohmann::json{{"text", out}}.dump(), "application/json");
  }

  httplib::Server server_;
  std::thread thread_;
  int port_ = 0;
  std::string token_;
  std::mutex mu_;
  std::map<std::string, int> attempts_;
  std::string feed_;
  std::string last_model_;
  std::atomic<int> requests_{0};
  std::atomic<int> in_flight_{0};
  std::atomic<int> max_in_flight_{0};
};

}  // namespace testkit
