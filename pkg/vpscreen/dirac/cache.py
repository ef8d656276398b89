import os
import json
import hashlib
import torch
from typing import Optional, Tuple
from .basis import RadialGrid
from ..nucleus import NuclearModel


FORMAT_NAME = "vpscreen-spectrum"
FORMAT_VERSION = 1


class SpectrumCache(object):
    def __init__(self, directory: str):
        """
        On-disk store of diagonalized spectra. Every file is a `torch.save` archive of a dictionary with the keys
            format:       "vpscreen-spectrum"
            version:      the layout version
            key:          the build parameters, i.e. kappa, the nuclear model parameters and the grid parameters
            energies:     float64 tensor of eigenvalues
            coefficients: float64 tensor, column i holds the eigenvector of energies[i]
        and is named by the sha1 of the JSON encoded build parameters.
        :param directory: The cache directory, created if missing
        """

        self.directory = directory
        os.makedirs(directory, exist_ok=True)

    @staticmethod
    def key(kappa: int, model: NuclearModel, grid: RadialGrid) -> dict:
        return {"kappa": int(kappa), "model": model.parameters_dict(), "grid": grid.parameters_dict()}

    def path(self, kappa: int, model: NuclearModel, grid: RadialGrid) -> str:
        encoded = json.dumps(self.key(kappa, model, grid), sort_keys=True)
        digest = hashlib.sha1(encoded.encode("utf-8")).hexdigest()

        return os.path.join(self.directory, f"{digest}.pt")

    def load(self, kappa: int, model: NuclearModel, grid: RadialGrid) -> Optional[Tuple[torch.Tensor, torch.Tensor]]:
        path = self.path(kappa, model, grid)
        if not os.path.exists(path):
            return None

        content = torch.load(path)
        if content.get("format") != FORMAT_NAME or content.get("version") != FORMAT_VERSION:
            return None

        # Guards against hash collisions and hand edited files
        if content["key"] != json.loads(json.dumps(self.key(kappa, model, grid), sort_keys=True)):
            return None

        return content["energies"], content["coefficients"]

    def store(self, kappa: int, model: NuclearModel, grid: RadialGrid, energies: torch.Tensor,
              coefficients: torch.Tensor):
        content = {
            "format": FORMAT_NAME,
            "version": FORMAT_VERSION,
            "key": json.loads(json.dumps(self.key(kappa, model, grid), sort_keys=True)),
            "energies": energies.clone(),
            "coefficients": coefficients.clone()
        }

        path = self.path(kappa, model, grid)
        tmp = f"{path}.{os.getpid()}.tmp"
        torch.save(content, tmp)
        os.replace(tmp, path)

        return path
