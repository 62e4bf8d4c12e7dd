"""Cut, tear and drill surgery on skinned triangle meshes, with particle soft bodies."""
