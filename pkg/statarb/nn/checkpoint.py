from pathlib import Path
from typing import Any, Dict

import numpy as np

from statarb.io.file import JsonHandler
from statarb.models.errors import InvalidParameterError
from statarb.nn.layers import LayerSpec
from statarb.nn.network import Network

FORMAT = 'statarb-network'
VERSION = 1


def network_to_dict(net: Network) -> Dict[str, Any]:
    return {
        'format': FORMAT,
        'version': VERSION,
        'layers': [{'in_dim': layer.in_dim, 'out_dim': layer.out_dim, 'activation': layer.activation.value,
                    'has_bias': layer.has_bias, 'dropout': layer.dropout} for layer in net.layers],
        'parameters': [{'shape': list(param.shape), 'values': param.ravel().tolist()}
                       for param in net.parameters],
    }


def network_from_dict(content: Dict[str, Any]) -> Network:
    if content.get('format') != FORMAT or content.get('version') != VERSION:
        raise InvalidParameterError(f'unsupported checkpoint header {content.get("format")} '
                                    f'v{content.get("version")}')
    layers = [LayerSpec(**layer) for layer in content['layers']]
    parameters = [np.asarray(param['values'], dtype=float).reshape(param['shape'])
                  for param in content['parameters']]
    return Network(layers, parameters).eval()


def save_network(net: Network, path: Path) -> None:
    JsonHandler().write(path, network_to_dict(net), sort_keys=False)


def load_network(path: Path) -> Network:
    return network_from_dict(JsonHandler().read(path))
