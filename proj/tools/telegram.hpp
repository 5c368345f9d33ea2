#pragma once

#include <string>

namespace pizzamon::cli {

// Forwards every line of a messenger capture file to the Telegram Bot API
// (sendMessage) when MONITOR_BOT_TOKEN and MONITOR_CHAT_ID are both set.
// Returns the number of messages accepted; -1 when the adapter is not
// configured or was built without TLS support.
int relay_capture(const std::string& capture_path, std::string& diagnostic);

}  // namespace pizzamon::cli
