#include "telegram.hpp"

#include <cstdlib>
#include <fstream>

#include <nlohmann/json.hpp>

#ifdef PIZZAMON_TELEGRAM
#define CPPHTTPLIB_OPENSSL_SUPPORT
#include <httplib.h>
#endif

namespace pizzamon::cli {

int relay_capture(const std::string& capture_path, std::string& diagnostic) {
  const char* token = std::getenv("MONITOR_BOT_TOKEN");
  const char* chat = std::getenv("MONITOR_CHAT_ID");
  if (token == nullptr || chat == nullptr || *token == '\0' || *chat == '\0') return -1;
#ifndef PIZZAMON_TELEGRAM
  diagnostic = "built without TLS support; messenger relay disabled";
  return -1;
#else
  std::ifstream in(capture_path);
  if (!in) {
    diagnostic = "cannot read " + capture_path;
    return 0;
  }
  httplib::Client client("https://api.telegram.org");
  client.set_connection_timeout(10);
  client.set_read_timeout(10);
  const std::string endpoint = std::string("/bot") + token + "/sendMessage";
  int sent = 0;
  std::string line;
  while (std::getline(in, line)) {
    if (line.empty()) continue;
    const auto captured = nlohmann::json::parse(line, nullptr, false);
    if (captured.is_discarded() || !captured.contains("text")) continue;
    const nlohmann::json body = {{"chat_id", chat}, {"text", captured["text"]}};
    auto res = client.Post(endpoint, body.dump(), "application/json");
    if (!res) {
      diagnostic = "telegram: " + httplib::to_string(res.error());
      break;
    }
    if (res->status != 200) {
      diagnostic = "telegram: HTTP " + std::to_string(res->status);
      break;
    }
    ++sent;
  }
  return sent;
#endif
}

}  // namespace pizzamon::cli
