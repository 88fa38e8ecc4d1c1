// Licensed under the Apache License, Version 2.0 (the "License");
// you may not use this file except in compliance with the License.
// You may obtain a copy of the License at
//
// http://www.apache.org/licenses/LICENSE-2.0
//
// Unless required by applicable law or agreed to in writing, software
// distributed under the License is distributed on an "AS IS" BASIS,
// WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
// See the License for the specific language governing permissions and
// limitations under the License.

//! Worker identity, transports and the bulk-synchronous collectives.

mod context;
mod frame;
mod tcp;
mod transport;

pub use context::{
    init_context, run_in_process, run_in_process_with_timeout, CommStats, ContextConfig, TransportKind, WorkerContext,
    DEFAULT_CONNECT_TIMEOUT, DEFAULT_RECV_TIMEOUT,
};
pub use frame::{deserialize_table, serialize_table, FRAME_MAGIC, FRAME_VERSION};
pub use tcp::{parse_address, parse_hosts, Handshake, TcpTransport, HANDSHAKE_MAGIC, HANDSHAKE_VERSION};
pub use transport::{InProcessHub, InProcessTransport, Transport};
