// SPDX-License-Identifier: Apache-2.0
#define CPPHTTPLIB_OPENSSL_SUPPORT
#include "kcgen/util/http.hpp"

#include <httplib.h>

#include "kcgen/util/error.hpp"

namespace kcgen::net {

HttpResponse post_json(const std::string& url, const std::map<std::string, std::string>& headers,
                       const std::string& body, int timeout_seconds) {
  auto scheme_end = url.find("://");
  if (scheme_end == std::string::npos) throw TransportError("malformed URL: " + url);
  auto path_start = url.find('/', scheme_end + 3);
  std::string origin = path_start == std::string::npos ? url : url.substr(0, path_start);
  std::string path = path_start == std::string::npos ? "/" : url.substr(path_start);

  httplib::Client client(origin);
  client.set_connection_timeout(timeout_seconds, 0);
  client.set_read_timeout(timeout_seconds, 0);
  client.set_write_timeout(timeout_seconds, 0);
  httplib::Headers h;
  for (const auto& [k, v] : headers) h.emplace(k, v);
  auto res = client.Post(path, h, body, "application/json");
  if (!res) {
    throw TransportError("no response from " + url + ": " + httplib::to_string(res.error()));
  }
  return {res->status, res->body};
}

}  // namespace kcgen::net
