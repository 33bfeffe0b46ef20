/*
 * Copyright 2026 The lipcert Authors
 *
 * Licensed under the Apache License, Version 2.0 (the "License");
 * you may not use this file except in compliance with the License.
 * You may obtain a copy of the License at
 *
 *     http://www.apache.org/licenses/LICENSE-2.0
 *
 * Unless required by applicable law or agreed to in writing, software
 * distributed under the License is distributed on an "AS IS" BASIS,
 * WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
 * See the License for the specific language governing permissions and
 * limitations under the License.
 */

#ifndef LIPCERT_LIPCERT_HPP
#define LIPCERT_LIPCERT_HPP

#include <lipcert/activation.hpp>
#include <lipcert/certificate_io.hpp>
#include <lipcert/certifier.hpp>
#include <lipcert/errors.hpp>
#include <lipcert/linalg.hpp>
#include <lipcert/network.hpp>
#include <lipcert/network_io.hpp>
#include <lipcert/oracles.hpp>
#include <lipcert/random.hpp>
#include <lipcert/sdp.hpp>
#include <lipcert/slopes.hpp>
#include <lipcert/stage.hpp>
#include <lipcert/verify.hpp>

#endif // LIPCERT_LIPCERT_HPP
