#include <iostream>
#include <string>

// Eigen must be seen before httplib pulls in <resolv.h>.
#include "raceline/service.hpp"

#include <CLI11.hpp>
#include <httplib.h>

int main(int argc, char** argv) {
  CLI::App app{"raceline editing service (JSON over HTTP, /api/v1)"};
  std::string host = "127.0.0.1";
  int port = 8080;
  app.add_option("--host", host, "bind address");
  app.add_option("--port", port, "TCP port");
  CLI11_PARSE(app, argc, argv);

  raceline::Service service;
  httplib::Server server;
  raceline::bind_http(server, service);
  std::cerr << "[service] listening on http://" << host << ":" << port << "/api/v1\n";
  if (!server.listen(host, port)) {
    std::cerr << "error [service]: cannot listen on " << host << ":" << port << '\n';
    return 1;
  }
  return 0;
}
