// SPDX-License-Identifier: Apache-2.0
#pragma once

#include <map>
#include <string>

namespace kcgen::net {

struct HttpResponse {
  int status = 0;
  std::string body;
};

/// POSTs a JSON body to an http:// or https:// URL. Throws TransportError when
/// no response is received (connection failure, timeout); HTTP error statuses
/// are returned to the caller.
HttpResponse post_json(const std::string& url, const std::map<std::string, std::string>& headers,
                       const std::string& body, int timeout_seconds);

}  // namespace kcgen::net
